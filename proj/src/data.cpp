#include "lp/data.hpp"
#include "lp/rng.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace lp {

namespace {

constexpr std::uint64_t kNoiseSalt = 0x6e6f697365ULL;  // "noise"

template <typename U>
void put_le(std::ostream& os, U value) {
  char buf[sizeof(U)];
  for (std::size_t k = 0; k < sizeof(U); ++k) buf[k] = static_cast<char>((value >> (8 * k)) & 0xff);
  os.write(buf, sizeof(U));
}

template <typename U>
U get_le(std::istream& is) {
  unsigned char buf[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(U))) throw std::runtime_error("truncated dataset file");
  U value = 0;
  for (std::size_t k = 0; k < sizeof(U); ++k) value |= static_cast<U>(buf[k]) << (8 * k);
  return value;
}

void put_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_le(os, std::bit_cast<std::uint64_t>(m(i, j)));
}

Eigen::MatrixXd get_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = std::bit_cast<double>(get_le<std::uint64_t>(is));
  return m;
}

}  // namespace

std::string to_string(InputLaw law) { return law == InputLaw::BoundedSubGaussian ? "rademacher" : "gaussian"; }

InputLaw parse_input_law(std::string_view name) {
  if (name == "rademacher" || name == "bounded-subgaussian") return InputLaw::BoundedSubGaussian;
  if (name == "gaussian" || name == "iid-gaussian") return InputLaw::IIDGaussian;
  throw std::invalid_argument("unknown input law '" + std::string(name) + "'");
}

double SamplerSpec::input_radius() const {
  return kind == InputLaw::BoundedSubGaussian ? tau * std::sqrt(static_cast<double>(d0))
                                              : std::numeric_limits<double>::infinity();
}

Eigen::MatrixXd sample_inputs(const SamplerSpec& spec, long n, std::uint64_t trial) {
  if (n < 1) throw std::invalid_argument("sample count must be at least 1");
  if (spec.d0 < 1) throw std::invalid_argument("input dimension must be positive");
  Eigen::MatrixXd x(n, spec.d0);
  for (long i = 0; i < n; ++i) {
    SplitMix64 g(spec.seed, trial, static_cast<std::uint64_t>(i));
    if (spec.kind == InputLaw::BoundedSubGaussian) {
      for (int k = 0; k < spec.d0; ++k) x(i, k) = (g() >> 63) ? spec.tau : -spec.tau;
    } else {
      std::normal_distribution<double> normal(0.0, spec.tau);
      for (int k = 0; k < spec.d0; ++k) x(i, k) = normal(g);
    }
  }
  return x;
}

Eigen::MatrixXd teacher_targets(const Teacher& teacher, const Eigen::MatrixXd& inputs, std::uint64_t noise_seed,
                                std::uint64_t trial) {
  const auto& arch = teacher.arch;
  check_conforms(arch, teacher.weights);
  if (inputs.cols() != arch.input_dim())
    throw ShapeError("inputs have " + std::to_string(inputs.cols()) + " columns, teacher layer 1 expects " +
                     std::to_string(arch.input_dim()));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(arch.output_dim());
  Eigen::MatrixXd y(inputs.rows(), arch.output_dim());
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    const Eigen::VectorXd x = inputs.row(i).transpose();
    y.row(i) = forward<double>(arch, teacher.weights, x, zero).output().transpose();
    if (teacher.noise > 0) {
      SplitMix64 g(noise_seed ^ kNoiseSalt, trial, static_cast<std::uint64_t>(i));
      y.row(i) += gaussian_vector(g, arch.output_dim(), teacher.noise).transpose();
    }
  }
  return y;
}

Eigen::MatrixXd teacher_map(const Teacher& teacher) {
  if (teacher.arch.activation() != Activation::Linear)
    throw std::invalid_argument("teacher map is defined for linear teachers only");
  Eigen::MatrixXd T = teacher.weights.W(1);
  for (int j = 2; j <= teacher.arch.depth(); ++j) T = teacher.weights.W(j) * T;
  return T;
}

Dataset make_dataset(const SamplerSpec& spec, const Teacher& teacher, long n, std::uint64_t trial) {
  if (spec.d0 != teacher.arch.input_dim())
    throw ShapeError("sampler produces d_0 = " + std::to_string(spec.d0) + ", teacher layer 1 expects " +
                     std::to_string(teacher.arch.input_dim()));
  Dataset data;
  data.inputs = sample_inputs(spec, n, trial);
  data.targets = teacher_targets(teacher, data.inputs, spec.seed, trial);
  data.sampler = spec;
  data.teacher = teacher;
  data.trial = trial;
  return data;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.inputs.cols() != b.inputs.cols() || a.targets.cols() != b.targets.cols())
    throw ShapeError("cannot concatenate datasets of different shapes");
  Dataset out = a;
  out.inputs.resize(a.size() + b.size(), a.inputs.cols());
  out.targets.resize(a.size() + b.size(), a.targets.cols());
  out.inputs << a.inputs, b.inputs;
  out.targets << a.targets, b.targets;
  return out;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write("LPD1", 4);
  put_le(os, static_cast<std::uint32_t>(data.inputs.cols()));
  put_le(os, static_cast<std::uint32_t>(data.targets.cols()));
  put_le(os, static_cast<std::uint64_t>(data.size()));
  put_le(os, data.sampler.seed);
  put_matrix(os, data.inputs);
  put_matrix(os, data.targets);
  if (!os) throw std::runtime_error("write failed for " + path.string());

  nlohmann::json side;
  side["sampler"] = {{"kind", to_string(data.sampler.kind)},
                     {"tau", data.sampler.tau},
                     {"d0", data.sampler.d0},
                     {"seed", data.sampler.seed}};
  side["trial"] = data.trial;
  if (data.teacher) {
    const Eigen::VectorXd flat = data.teacher->weights.flatten();
    side["teacher"] = {{"arch", data.teacher->arch.to_string()},
                       {"radius", data.teacher->weights.radius},
                       {"noise", data.teacher->noise},
                       {"weights", std::vector<double>(flat.data(), flat.data() + flat.size())}};
  }
  std::ofstream js(path.string() + ".json");
  js << side.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::string_view(magic, 4) != "LPD1")
    throw std::runtime_error(path.string() + " is not an LPD1 dataset");
  const auto d0 = get_le<std::uint32_t>(is);
  const auto dl = get_le<std::uint32_t>(is);
  const auto n = get_le<std::uint64_t>(is);
  Dataset data;
  data.sampler.seed = get_le<std::uint64_t>(is);
  data.sampler.d0 = static_cast<int>(d0);
  data.inputs = get_matrix(is, static_cast<Eigen::Index>(n), d0);
  data.targets = get_matrix(is, static_cast<Eigen::Index>(n), dl);

  std::ifstream js(path.string() + ".json");
  if (js) {
    const auto side = nlohmann::json::parse(js);
    data.sampler.kind = parse_input_law(side.at("sampler").at("kind").get<std::string>());
    data.sampler.tau = side.at("sampler").at("tau").get<double>();
    data.trial = side.value("trial", std::uint64_t{0});
    if (side.contains("teacher")) {
      const auto& t = side["teacher"];
      Teacher teacher;
      teacher.arch = Architecture::parse(t.at("arch").get<std::string>());
      const auto w = t.at("weights").get<std::vector<double>>();
      teacher.weights = WeightPoint<double>::from_flat(
          teacher.arch, Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())),
          t.at("radius").get<double>());
      teacher.noise = t.value("noise", 0.0);
      data.teacher = teacher;
    }
  }
  return data;
}

void export_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.precision(17);
  for (Eigen::Index k = 0; k < data.inputs.cols(); ++k) os << (k ? "," : "") << "x" << k;
  for (Eigen::Index k = 0; k < data.targets.cols(); ++k) os << ",y" << k;
  os << '\n';
  for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) {
    for (Eigen::Index k = 0; k < data.inputs.cols(); ++k) os << (k ? "," : "") << data.inputs(i, k);
    for (Eigen::Index k = 0; k < data.targets.cols(); ++k) os << ',' << data.targets(i, k);
    os << '\n';
  }
}

}  // namespace lp
