#include "kirimorph/materials.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kirimorph/error.hpp"

namespace kirimorph {

void MaterialModel::validate() const {
  if (!(E > 0.0)) throw ParameterError("material '" + name + "': E must be > 0");
  if (!(nu >= 0.0 && nu < 0.5)) throw ParameterError("material '" + name + "': nu must lie in [0, 0.5)");
  if (!std::isfinite(alpha)) throw ParameterError("material '" + name + "': alpha must be finite");
}

MaterialModel material_preset(const std::string& name) {
  if (name == "shrinky_dink") return {name, kShrinkyDinkE, kDefaultNu, -0.01};
  if (name == "shrinky_dink_measured") return {name, kShrinkyDinkE, kDefaultNu, -0.005};
  if (name == "abs_kirigami") return {name, kKirigamiE, kDefaultNu, 0.0};
  if (name == "abs_kirigami_measured") return {name, kKirigamiE, kDefaultNu, -1e-4};
  throw ParameterError("unknown material preset '" + name + "'");
}

std::vector<std::string> material_preset_names() {
  return {"shrinky_dink", "shrinky_dink_measured", "abs_kirigami", "abs_kirigami_measured"};
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back({});
  return out;
}

double to_number(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("not a number: '" + s + "'", line);
  }
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Non-empty, non-comment lines with their 1-based line numbers.
std::vector<std::pair<int, std::string>> data_lines(const std::string& text) {
  std::vector<std::pair<int, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    out.push_back({no, line});
  }
  return out;
}

}  // namespace

void StressStrainCurve::validate() const {
  if (samples.size() < 2) throw ParseError("stress-strain curve needs at least 2 samples");
  if (samples.front().first != 0.0 || samples.front().second != 0.0)
    throw ParseError("stress-strain curve must start at (0, 0)");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].first > samples[i - 1].first))
      throw ParseError("strains must be strictly increasing (sample " + std::to_string(i) + ")");
}

StressStrainCurve parse_stress_strain_csv(const std::string& text) {
  const auto lines = data_lines(text);
  if (lines.empty()) throw ParseError("empty stress-strain file");
  const auto head = split_csv(lower(lines[0].second));
  if (head.size() != 2 || head[0] != "strain" || head[1] != "stress_mpa")
    throw ParseError("expected header 'strain,stress_mpa'", lines[0].first);
  StressStrainCurve c;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv(lines[i].second);
    if (cells.size() != 2) throw ParseError("expected 2 columns", lines[i].first);
    c.samples.push_back({to_number(cells[0], lines[i].first), to_number(cells[1], lines[i].first)});
  }
  if (!c.samples.empty() && c.samples.front().first > 0.0) c.samples.insert(c.samples.begin(), {0.0, 0.0});
  c.validate();
  return c;
}

StressStrainCurve read_stress_strain_csv(const std::filesystem::path& path) {
  return parse_stress_strain_csv(slurp(path));
}

double default_fit_strain(const StressStrainCurve& curve) { return std::min(0.05, curve.max_strain()); }

double fit_linear_modulus(const StressStrainCurve& curve, double eps_m) {
  curve.validate();
  if (!(eps_m > 0.0)) throw ParameterError("eps_m must be > 0");
  if (eps_m > curve.max_strain())
    throw RangeError("eps_m = " + std::to_string(eps_m) + " exceeds the largest strain " +
                     std::to_string(curve.max_strain()));
  double integral = 0.0;
  const auto& s = curve.samples;
  for (std::size_t i = 1; i < s.size(); ++i) {
    const auto [e0, s0] = s[i - 1];
    auto [e1, s1] = s[i];
    if (e0 >= eps_m) break;
    if (e1 > eps_m) {
      s1 = s0 + (s1 - s0) * (eps_m - e0) / (e1 - e0);
      e1 = eps_m;
    }
    integral += 0.5 * (s0 + s1) * (e1 - e0);
  }
  return 2.0 * integral / (eps_m * eps_m);
}

double contraction_stress(const MaterialModel& mat, double delta_T) {
  if (delta_T < 0.0) throw ParameterError("delta_T must be >= 0");
  const double s = -mat.alpha * mat.E * delta_T;
  return s == 0.0 ? 0.0 : s;  // no negative zero
}

Eigen::Matrix3d thermal_eigenstrain(const MaterialModel& mat, double delta_T, EigenstrainMode mode) {
  const double e = mat.alpha * delta_T;
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(0, 0) = e;
  m(1, 1) = e;
  if (mode == EigenstrainMode::isotropic) m(2, 2) = e;
  return m;
}

double to_kelvin(double v, TempUnit u) {
  switch (u) {
    case TempUnit::F: return (v - 32.0) * 5.0 / 9.0 + 273.15;
    case TempUnit::C: return v + 273.15;
    case TempUnit::K: return v;
  }
  return v;
}

double from_kelvin(double k, TempUnit u) {
  switch (u) {
    case TempUnit::F: return (k - 273.15) * 9.0 / 5.0 + 32.0;
    case TempUnit::C: return k - 273.15;
    case TempUnit::K: return k;
  }
  return k;
}

TempUnit parse_temp_unit(const std::string& s) {
  std::string t = lower(trim(s));
  if (t.rfind("deg", 0) == 0) t = t.substr(3);
  if (t == "f") return TempUnit::F;
  if (t == "c") return TempUnit::C;
  if (t == "k") return TempUnit::K;
  throw ParseError("unknown temperature unit '" + s + "'");
}

TemperatureLog parse_temperature_log(const std::string& text) {
  const auto lines = data_lines(text);
  if (lines.empty()) throw ParseError("empty temperature log");
  const auto head = split_csv(lines[0].second);
  TemperatureLog log;
  if (head.size() == 3 && lower(head[0]) == "time_s" && lower(head[1]) == "temp") {
    log.source_unit = parse_temp_unit(head[2]);
  } else if (head.size() == 2 && lower(head[0]) == "time_s" && lower(head[1]).rfind("temp_", 0) == 0) {
    log.source_unit = parse_temp_unit(head[1].substr(5));
  } else {
    throw ParseError("expected header 'time_s,temp,<F|C|K>'", lines[0].first);
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv(lines[i].second);
    if (cells.size() < 2) throw ParseError("expected 'time,temperature'", lines[i].first);
    const double t = to_number(cells[0], lines[i].first);
    const double T = to_kelvin(to_number(cells[1], lines[i].first), log.source_unit);
    if (!log.samples.empty() && t < log.samples.back().first)
      throw ParseError("time goes backwards", lines[i].first);
    log.samples.push_back({t, T});
  }
  if (log.samples.empty()) throw ParseError("temperature log has no samples");
  return log;
}

TemperatureLog read_temperature_log(const std::filesystem::path& path) { return parse_temperature_log(slurp(path)); }

TemperatureSummary summarize_temperature_log(const TemperatureLog& log, double ambient_K) {
  const auto& s = log.samples;
  if (s.empty()) throw ParseError("temperature log has no samples");
  TemperatureSummary r;
  r.samples = s.size();
  r.duration_s = s.back().first - s.front().first;
  if (r.duration_s <= 0.0) {
    double m = 0.0;
    for (const auto& p : s) m += p.second;
    m /= static_cast<double>(s.size());
    double v = 0.0;
    for (const auto& p : s) v += (p.second - m) * (p.second - m);
    r.mean_K = m;
    r.std_K = std::sqrt(v / static_cast<double>(s.size()));
  } else {
    double integral = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) integral += 0.5 * (s[i].second + s[i - 1].second) * (s[i].first - s[i - 1].first);
    r.mean_K = integral / r.duration_s;
    // Exact integral of (T - mean)^2 for a linear segment.
    double var = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) {
      const double a = s[i - 1].second - r.mean_K, b = s[i].second - r.mean_K;
      var += (a * a + a * b + b * b) / 3.0 * (s[i].first - s[i - 1].first);
    }
    r.std_K = std::sqrt(std::max(0.0, var / r.duration_s));
  }
  r.delta_T_mean_K = r.mean_K - ambient_K;
  return r;
}

TemperatureSummary ingest_temperature_log(const std::filesystem::path& path, double ambient_K) {
  return summarize_temperature_log(read_temperature_log(path), ambient_K);
}

}  // namespace kirimorph
