#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "qaoi/sim.hpp"
#include "qaoi/solver.hpp"

namespace qaoi {

/// A solved policy plus everything needed to replay it: the scenario it was
/// solved for, the objective, and the converged values.
struct PolicyFile {
  ModelParams params;
  Objective objective = Objective::PQ;
  Policy policy;
  ValueFunction value;
};

namespace detail {

inline std::string fmt(const char* spec, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string g17(double v) { return fmt("%.17g", v); }   // exact round trip
inline std::string g12(double v) { return fmt("%.12g", v); }   // stable display
inline std::string gshort(double v) { return fmt("%g", v); }   // file tags

inline double parse_double(const std::string& text, long line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + text + "'", line);
  }
  if (used != text.size()) throw ConfigError("trailing junk after number '" + text + "'", line);
  return v;
}

inline std::int64_t parse_int(const std::string& text, long line) {
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected an integer, got '" + text + "'", line);
  }
  if (used != text.size()) throw ConfigError("trailing junk after integer '" + text + "'", line);
  return v;
}

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto from = s.find_first_not_of(" \t\r");
  if (from == std::string::npos) return "";
  const auto to = s.find_last_not_of(" \t\r");
  return s.substr(from, to - from + 1);
}

}  // namespace detail

inline constexpr const char* kPolicyMagic = "# qaoi-policy v1";
inline constexpr const char* kPolicyHeader = "index,age,sigma,tokens,action,value";

inline void save_policy(const std::filesystem::path& path, const PolicyFile& file) {
  file.params.validate();
  detail::check_policy_shape(file.policy.action_of, file.params);
  if (file.value.value_of.size() != file.policy.action_of.size())
    throw std::invalid_argument("save_policy: value/policy size mismatch");

  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const auto& p = file.params;
  out << kPolicyMagic << '\n';
  out << "# tq=" << p.query_period << '\n';
  out << "# epsilon=" << detail::g17(p.erasure_prob) << '\n';
  out << "# mu_b=" << detail::g17(p.token_rate) << '\n';
  out << "# delta_max=" << p.max_age << '\n';
  out << "# bucket=" << p.bucket_capacity << '\n';
  out << "# discount=" << detail::g17(p.discount) << '\n';
  out << "# objective=" << to_string(file.objective) << '\n';
  out << kPolicyHeader << '\n';
  const std::int64_t n = state_count(p);
  for (std::int64_t i = 0; i < n; ++i) {
    const State s = state_at(i, p);
    out << i << ',' << s.age << ',' << s.slots_to_query << ',' << s.tokens << ','
        << static_cast<int>(file.policy.action_of[static_cast<std::size_t>(i)]) << ','
        << detail::g17(file.value.value_of[static_cast<std::size_t>(i)]) << '\n';
  }
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

inline PolicyFile load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open policy file '" + path.string() + "'");

  std::string line;
  long line_no = 0;
  if (!std::getline(in, line) || detail::trim(line) != kPolicyMagic)
    throw ConfigError("'" + path.string() + "' is not a qaoi policy file", 1);
  ++line_no;

  std::map<std::string, std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t == kPolicyHeader) break;
    if (t.rfind("# ", 0) != 0) throw ConfigError("expected '# key=value' or column header", line_no);
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed header line", line_no);
    const std::string key = detail::trim(t.substr(2, eq - 2));
    if (header.count(key)) throw ConfigError("duplicate header key '" + key + "'", line_no);
    header[key] = detail::trim(t.substr(eq + 1));
  }
  for (const char* key : {"tq", "epsilon", "mu_b", "delta_max", "bucket", "discount", "objective"})
    if (!header.count(key))
      throw ConfigError("policy header is missing '" + std::string(key) + "'", line_no);
  for (const auto& [key, value] : header) {
    (void)value;
    if (key != "tq" && key != "epsilon" && key != "mu_b" && key != "delta_max" &&
        key != "bucket" && key != "discount" && key != "objective")
      throw ConfigError("unknown policy header key '" + key + "'", line_no);
  }

  PolicyFile file;
  file.params.query_period = static_cast<int>(detail::parse_int(header["tq"], line_no));
  file.params.erasure_prob = detail::parse_double(header["epsilon"], line_no);
  file.params.token_rate = detail::parse_double(header["mu_b"], line_no);
  file.params.max_age = static_cast<int>(detail::parse_int(header["delta_max"], line_no));
  file.params.bucket_capacity = static_cast<int>(detail::parse_int(header["bucket"], line_no));
  file.params.discount = detail::parse_double(header["discount"], line_no);
  file.objective = parse_objective(header["objective"]);
  file.params.validate();

  const std::int64_t n = state_count(file.params);
  file.policy.action_of.reserve(static_cast<std::size_t>(n));
  file.value.value_of.reserve(static_cast<std::size_t>(n));
  std::int64_t expect = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(detail::trim(line), ',');
    if (fields.size() != 6) throw ConfigError("expected 6 comma-separated fields", line_no);
    const std::int64_t idx = detail::parse_int(fields[0], line_no);
    if (idx != expect) throw ConfigError("rows out of order: expected index " +
                                             std::to_string(expect), line_no);
    const State s = state_at(idx, file.params);
    if (detail::parse_int(fields[1], line_no) != s.age ||
        detail::parse_int(fields[2], line_no) != s.slots_to_query ||
        detail::parse_int(fields[3], line_no) != s.tokens)
      throw ConfigError("state fields disagree with the dense index", line_no);
    const std::int64_t action = detail::parse_int(fields[4], line_no);
    if (action != 0 && action != 1) throw ConfigError("action must be 0 or 1", line_no);
    if (action == 1 && s.tokens < 1)
      throw ConfigError("policy transmits from an empty bucket", line_no);
    const double value = detail::parse_double(fields[5], line_no);
    if (!std::isfinite(value) || value < 0.0)
      throw ConfigError("value must be finite and nonnegative", line_no);
    file.policy.action_of.push_back(action == 1 ? Action::Transmit : Action::Silent);
    file.value.value_of.push_back(value);
    ++expect;
  }
  if (expect != n)
    throw ConfigError("policy file has " + std::to_string(expect) + " rows, expected " +
                          std::to_string(n), line_no);
  return file;
}

/// Trajectory dump matching what the simulator records per slot.
inline void write_trajectory_csv(const std::filesystem::path& path,
                                 std::span<const TrajectoryRecord> records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "t,age,sigma,tokens,action,delivered,is_query\n";
  for (const auto& r : records)
    out << r.t << ',' << r.age << ',' << r.slots_to_query << ',' << r.tokens << ','
        << static_cast<int>(r.action) << ',' << (r.delivered ? 1 : 0) << ','
        << (r.is_query_slot ? 1 : 0) << '\n';
  if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

}  // namespace qaoi
