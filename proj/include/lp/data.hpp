#pragma once

#include "lp/model.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace lp {

enum class InputLaw {
  BoundedSubGaussian,  // Rademacher entries +-tau, so ||x||_2 = tau sqrt(d_0) exactly
  IIDGaussian,         // entries N(0, tau^2)
};

std::string to_string(InputLaw law);
InputLaw parse_input_law(std::string_view name);

struct SamplerSpec {
  InputLaw kind = InputLaw::BoundedSubGaussian;
  double tau = 1;
  int d0 = 1;
  std::uint64_t seed = 0;

  /// Input radius r_x; infinite for Gaussian inputs.
  double input_radius() const;
};

/// n x d_0 matrix, one sample per row. Row i of trial t is drawn from stream
/// (seed, t, i) alone, so any row can be regenerated independently.
Eigen::MatrixXd sample_inputs(const SamplerSpec& spec, long n, std::uint64_t trial = 0);

struct Teacher {
  Architecture arch;
  WeightPoint<double> weights;
  double noise = 0;  // standard deviation of additive Gaussian target noise
};

/// y_i = forward(teacher, x_i) + noise. Noise for row i of trial t is drawn
/// from its own stream keyed on `noise_seed`.
Eigen::MatrixXd teacher_targets(const Teacher& teacher, const Eigen::MatrixXd& inputs,
                                std::uint64_t noise_seed = 0, std::uint64_t trial = 0);

/// Linear teacher map T = B_{l:1}.
Eigen::MatrixXd teacher_map(const Teacher& teacher);

struct Dataset {
  Eigen::MatrixXd inputs;   // n x d_0
  Eigen::MatrixXd targets;  // n x d_l
  SamplerSpec sampler;
  std::optional<Teacher> teacher;
  std::uint64_t trial = 0;

  long size() const { return static_cast<long>(inputs.rows()); }
  Eigen::VectorXd x(long i) const { return inputs.row(i).transpose(); }
  Eigen::VectorXd y(long i) const { return targets.row(i).transpose(); }
};

/// Inputs from `spec`, targets from `teacher`; the noise stream is derived
/// from the sampler seed.
Dataset make_dataset(const SamplerSpec& spec, const Teacher& teacher, long n, std::uint64_t trial = 0);

/// Rows [0, n) of `a` followed by the rows of `b`.
Dataset concat(const Dataset& a, const Dataset& b);

/// Binary layout: "LPD1", u32 d_0, u32 d_l, u64 n, u64 seed, then inputs and
/// targets row-major as little-endian f64. Provenance goes to `path.json`.
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
void export_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace lp
