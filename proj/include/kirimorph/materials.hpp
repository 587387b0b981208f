#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace kirimorph {

/// Linear isotropic elasticity with a thermal eigenstrain coefficient.
struct MaterialModel {
  std::string name;
  double E = 0.0;      // MPa
  double nu = 0.0;
  double alpha = 0.0;  // 1/K, negative = contraction on heating

  /// Throws ParameterError unless E > 0 and 0 <= nu < 0.5.
  void validate() const;
  double lame_lambda() const { return E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)); }
  double shear_modulus() const { return E / (2.0 * (1.0 + nu)); }
};

inline constexpr double kShrinkyDinkE = 404.2082;  // MPa
inline constexpr double kKirigamiE = 761.6368;     // MPa
inline constexpr double kDefaultNu = 0.49;

/// shrinky_dink (alpha -0.01/K, the simulation fit), shrinky_dink_measured
/// (-0.005/K), abs_kirigami (alpha 0), abs_kirigami_measured (-1e-4/K).
MaterialModel material_preset(const std::string& name);
std::vector<std::string> material_preset_names();

struct StressStrainCurve {
  std::vector<std::pair<double, double>> samples;  // (strain, stress MPa)

  void validate() const;
  double max_strain() const { return samples.empty() ? 0.0 : samples.back().first; }
};

/// CSV with header `strain,stress_mpa`. A curve whose first strain is
/// positive gets an implicit (0, 0) origin sample.
StressStrainCurve parse_stress_strain_csv(const std::string& text);
StressStrainCurve read_stress_strain_csv(const std::filesystem::path& path);

/// min(0.05, max strain)
double default_fit_strain(const StressStrainCurve& curve);

/// Energy-equivalent modulus E = 2/eps_m^2 * int_0^eps_m sigma d eps (trapezoid,
/// interpolated at eps_m).
double fit_linear_modulus(const StressStrainCurve& curve, double eps_m);

/// sigma = -alpha * E * delta_T, MPa.
double contraction_stress(const MaterialModel& mat, double delta_T);

enum class EigenstrainMode { in_plane, isotropic };

Eigen::Matrix3d thermal_eigenstrain(const MaterialModel& mat, double delta_T, EigenstrainMode mode);

/// The number of continuation steps lives in SolveConfig::n_load_steps.
struct ThermalLoad {
  double delta_T = 110.0;  // K
  EigenstrainMode mode = EigenstrainMode::in_plane;
};

enum class TempUnit { F, C, K };

double to_kelvin(double value, TempUnit unit);
double from_kelvin(double kelvin, TempUnit unit);
TempUnit parse_temp_unit(const std::string& s);  // "F", "C", "K" (case-insensitive, optional degree prefix)

struct TemperatureLog {
  std::vector<std::pair<double, double>> samples;  // (time s, temperature K)
  TempUnit source_unit = TempUnit::K;
};

/// Header `time_s,temp,<F|C|K>` (or `time_s,temp_F` style); rows `time,temperature`.
TemperatureLog parse_temperature_log(const std::string& text);
TemperatureLog read_temperature_log(const std::filesystem::path& path);

struct TemperatureSummary {
  double mean_K = 0, std_K = 0, duration_s = 0, delta_T_mean_K = 0;
  std::size_t samples = 0;
};

/// Time-weighted statistics of the piecewise-linear temperature history.
TemperatureSummary summarize_temperature_log(const TemperatureLog& log, double ambient_K);
TemperatureSummary ingest_temperature_log(const std::filesystem::path& path, double ambient_K);

}  // namespace kirimorph
