#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "kirimorph/error.hpp"
#include "kirimorph/materials.hpp"

using namespace kirimorph;

namespace {

StressStrainCurve sampled(int n, double eps_max, double (*sigma)(double)) {
  StressStrainCurve c;
  for (int i = 0; i < n; ++i) {
    const double e = eps_max * i / (n - 1);
    c.samples.push_back({e, sigma(e)});
  }
  return c;
}

double linear500(double e) { return 500.0 * e; }
double quad3000(double e) { return 3000.0 * e * e; }
double concave(double e) { return 800.0 * e - 4000.0 * e * e; }
double convex(double e) { return 100.0 * e + 9000.0 * e * e * e; }

}  // namespace

TEST(Materials, PresetsCarryTableValues) {
  const auto s = material_preset("shrinky_dink");
  EXPECT_DOUBLE_EQ(s.E, 404.2082);
  EXPECT_DOUBLE_EQ(s.alpha, -0.01);
  EXPECT_DOUBLE_EQ(s.nu, 0.49);
  EXPECT_DOUBLE_EQ(material_preset("shrinky_dink_measured").alpha, -0.005);
  EXPECT_DOUBLE_EQ(material_preset("abs_kirigami").E, 761.6368);
  EXPECT_DOUBLE_EQ(material_preset("abs_kirigami").alpha, 0.0);
  for (const auto& n : material_preset_names()) EXPECT_NO_THROW(material_preset(n).validate());
  EXPECT_THROW(material_preset("steel"), ParameterError);
  EXPECT_THROW((MaterialModel{"x", 1.0, 0.5, 0.0}.validate()), ParameterError);
  EXPECT_THROW((MaterialModel{"x", 0.0, 0.3, 0.0}.validate()), ParameterError);
}

TEST(Materials, LinearCurveFitIsExact) {
  const auto c = sampled(11, 0.05, linear500);
  EXPECT_DOUBLE_EQ(fit_linear_modulus(c, 0.05), 500.0);
  EXPECT_NEAR(fit_linear_modulus(c, 0.0137), 500.0, 1e-9);
}

TEST(Materials, QuadraticCurveMatchesAnalyticIntegral) {
  const auto c = sampled(2001, 0.1, quad3000);
  // int_0^m k e^2 de = k m^3 / 3, so E = 2/3 k m
  EXPECT_NEAR(fit_linear_modulus(c, 0.1) / 200.0, 1.0, 1e-3);
}

TEST(Materials, FitErrors) {
  const auto c = sampled(11, 0.05, linear500);
  EXPECT_THROW(fit_linear_modulus(c, 0.06), RangeError);
  EXPECT_THROW(fit_linear_modulus(c, 0.0), ParameterError);
  StressStrainCurve bad{{{0.0, 0.0}, {0.01, 1.0}, {0.01, 2.0}}};
  EXPECT_THROW(fit_linear_modulus(bad, 0.005), ParseError);
}

TEST(Materials, FitIsHomogeneousInStress) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  const auto c = sampled(101, 0.08, concave);
  const double base = fit_linear_modulus(c, 0.05);
  for (int k = 0; k < 10; ++k) {
    const double s = scale(rng);
    auto d = c;
    for (auto& p : d.samples) p.second *= s;
    EXPECT_NEAR(fit_linear_modulus(d, 0.05), s * base, 1e-12 * s * base);
  }
}

TEST(Materials, FitBoundedBySecantAndInitialTangent) {
  // softening curve: secant below fit below tangent
  const auto soft = sampled(401, 0.08, concave);
  const double e1 = fit_linear_modulus(soft, 0.05);
  EXPECT_LT(concave(0.05) / 0.05, e1);
  EXPECT_LT(e1, 800.0);
  // stiffening curve: tangent below fit below secant
  const auto stiff = sampled(401, 0.08, convex);
  const double e2 = fit_linear_modulus(stiff, 0.05);
  EXPECT_GT(convex(0.05) / 0.05, e2);
  EXPECT_GT(e2, 100.0);
}

TEST(Materials, CsvParsing) {
  const auto c = parse_stress_strain_csv("strain,stress_mpa\n0,0\n0.01,5\n0.02,10\n");
  EXPECT_EQ(c.samples.size(), 3u);
  EXPECT_DOUBLE_EQ(default_fit_strain(c), 0.02);
  const auto d = parse_stress_strain_csv("strain,stress_mpa\n0.01,5\n0.1,50\n");
  EXPECT_EQ(d.samples.front(), (std::pair<double, double>{0.0, 0.0}));
  EXPECT_DOUBLE_EQ(default_fit_strain(d), 0.05);
  try {
    parse_stress_strain_csv("strain,stress_mpa\n0,0\n0.01,abc\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(parse_stress_strain_csv("eps,sigma\n0,0\n"), ParseError);
}

TEST(Materials, ContractionStress) {
  EXPECT_NEAR(contraction_stress(material_preset("shrinky_dink"), 110.0), 444.63, 5e-3);
  EXPECT_EQ(contraction_stress(material_preset("shrinky_dink"), 0.0), 0.0);
  EXPECT_EQ(contraction_stress(material_preset("abs_kirigami"), 110.0), 0.0);
  EXPECT_THROW(contraction_stress(material_preset("abs_kirigami"), -1.0), ParameterError);
  const auto m = material_preset("shrinky_dink");
  EXPECT_NEAR(contraction_stress(m, 37.0) + contraction_stress(m, 73.0), contraction_stress(m, 110.0), 1e-12);
}

TEST(Materials, Eigenstrain) {
  const auto e = thermal_eigenstrain(material_preset("shrinky_dink"), 110.0, EigenstrainMode::in_plane);
  EXPECT_NEAR(e(0, 0), -1.1, 1e-15);
  EXPECT_NEAR(e(1, 1), -1.1, 1e-15);
  EXPECT_EQ(e(2, 2), 0.0);
  EXPECT_EQ(e(0, 1), 0.0);
  const auto iso = thermal_eigenstrain(material_preset("shrinky_dink_measured"), 110.0, EigenstrainMode::isotropic);
  EXPECT_TRUE(iso.isApprox(-0.55 * Eigen::Matrix3d::Identity(), 1e-15));
  EXPECT_TRUE(thermal_eigenstrain(material_preset("shrinky_dink"), 0.0, EigenstrainMode::isotropic).isZero(0.0));
}

TEST(Materials, UnitRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> t(-100.0, 900.0);
  for (int i = 0; i < 200; ++i) {
    const double f = t(rng);
    EXPECT_NEAR(from_kelvin(to_kelvin(f, TempUnit::F), TempUnit::F), f, 1e-9);
    EXPECT_NEAR(from_kelvin(to_kelvin(f, TempUnit::C), TempUnit::C), f, 1e-9);
  }
  EXPECT_NEAR(to_kelvin(212.0, TempUnit::F), 373.15, 1e-12);
}

TEST(TemperatureLog, OvenAgainstAmbient) {
  const auto log = parse_temperature_log("time_s,temp,F\n0,270\n60,270\n300,270\n");
  const auto s = summarize_temperature_log(log, to_kelvin(72.0, TempUnit::F));
  EXPECT_NEAR(s.delta_T_mean_K, (270.0 - 72.0) * 5.0 / 9.0, 1e-9);
  EXPECT_NEAR(s.delta_T_mean_K, 110.0, 1e-9);
  EXPECT_NEAR(s.std_K, 0.0, 1e-9);
  EXPECT_DOUBLE_EQ(s.duration_s, 300.0);
}

TEST(TemperatureLog, SingleSampleAndSymmetry) {
  const auto one = summarize_temperature_log(parse_temperature_log("time_s,temp,K\n5,400\n"), 300.0);
  EXPECT_EQ(one.std_K, 0.0);
  EXPECT_EQ(one.duration_s, 0.0);
  EXPECT_DOUBLE_EQ(one.delta_T_mean_K, 100.0);
  // two equal-length plateaus joined by instantaneous steps
  const auto two = summarize_temperature_log(
      parse_temperature_log("time_s,temp,K\n0,400\n10,400\n10,410\n20,410\n"), 300.0);
  EXPECT_NEAR(two.mean_K, 405.0, 1e-12);
  EXPECT_NEAR(two.std_K, 5.0, 1e-12);
}

TEST(TemperatureLog, LinearRampStatistics) {
  // T = 300 + t over [0, 60]: mean 330, std 60 / sqrt(12)
  const auto s = summarize_temperature_log(parse_temperature_log("time_s,temp,C\n0,26.85\n30,56.85\n60,86.85\n"), 300.0);
  EXPECT_NEAR(s.mean_K, 330.0, 1e-9);
  EXPECT_NEAR(s.std_K, 60.0 / std::sqrt(12.0), 1e-9);
}

TEST(TemperatureLog, HeaderVariantsAndErrors) {
  EXPECT_EQ(parse_temperature_log("time_s,temp_F\n0,100\n").source_unit, TempUnit::F);
  EXPECT_EQ(parse_temperature_log("time_s,temp,degC\n0,100\n").source_unit, TempUnit::C);
  EXPECT_THROW(parse_temperature_log(""), ParseError);
  EXPECT_THROW(parse_temperature_log("time_s,temp,F\n"), ParseError);
  EXPECT_THROW(parse_temperature_log("time_s,temp,X\n0,1\n"), ParseError);
  try {
    parse_temperature_log("time_s,temp,K\n0,300\n10,301\n5,302\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4);
  }
}

TEST(TemperatureLog, ReadsFromDisk) {
  const auto path = std::filesystem::temp_directory_path() / "kirimorph_templog_test.csv";
  {
    std::ofstream out(path);
    out << "time_s,temp,F\n0,270\n120,270\n";
  }
  const auto s = ingest_temperature_log(path, to_kelvin(72.0, TempUnit::F));
  EXPECT_NEAR(s.delta_T_mean_K, 110.0, 1e-9);
  std::filesystem::remove(path);
  EXPECT_THROW(ingest_temperature_log(path, 0.0), IoError);
}
