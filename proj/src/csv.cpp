#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "wbdr/instances.hpp"

namespace wbdr {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
  }
  return fields;
}

bool parse_double(std::string_view field, double& value) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  return ec == std::errc() && ptr == field.data() + field.size() && !field.empty();
}

bool parse_id(std::string_view field, long long& value) {
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  return ec == std::errc() && ptr == field.data() + field.size() && !field.empty();
}

struct Group {
  std::vector<double> coords;
  std::vector<double> weights;
};

}  // namespace

std::vector<DiscreteDistribution> parse_csv_distributions(std::istream& in) {
  std::map<long long, Group> groups;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  bool seen_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_fields(line);
    long long id = 0;
    if (!parse_id(fields[0], id)) {
      if (!seen_data && line_no == 1) continue;  // header
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": bad dist_id");
    }
    if (fields.size() < 3) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": need dist_id, w and a coordinate");
    }
    const std::size_t row_dim = fields.size() - 2;
    if (seen_data && row_dim != dim) {
      throw Error(ErrorCode::kRaggedRows, "line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(dim) + " coordinates, got " +
                                              std::to_string(row_dim));
    }
    dim = row_dim;
    seen_data = true;
    Group& g = groups[id];
    double w = 0.0;
    if (!parse_double(fields[1], w)) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": bad weight");
    }
    g.weights.push_back(w);
    for (std::size_t c = 2; c < fields.size(); ++c) {
      double x = 0.0;
      if (!parse_double(fields[c], x)) {
        throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": bad coordinate");
      }
      g.coords.push_back(x);
    }
  }
  std::vector<DiscreteDistribution> out;
  out.reserve(groups.size());
  for (auto& [id, g] : groups) {
    const auto count = static_cast<Eigen::Index>(g.weights.size());
    Matrix atoms = Eigen::Map<const Matrix>(g.coords.data(), count, static_cast<Eigen::Index>(dim));
    Vector weights = Eigen::Map<const Vector>(g.weights.data(), count);
    try {
      out.push_back(make_distribution(std::move(atoms), std::move(weights)));
    } catch (const Error& e) {
      throw Error(e.code(), "dist_id " + std::to_string(id) + ": " + e.what());
    }
  }
  return out;
}

std::vector<DiscreteDistribution> load_csv_distributions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return parse_csv_distributions(in);
}

void write_csv_distributions(std::ostream& out, std::span<const DiscreteDistribution> mus) {
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < mus.size(); ++i) {
    const auto& mu = mus[i];
    for (std::size_t t = 0; t < mu.size(); ++t) {
      out << i << ',' << mu.weight(t);
      const auto x = mu.atom(t);
      for (Eigen::Index c = 0; c < x.size(); ++c) out << ',' << x(c);
      out << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace wbdr
