#include "lp/harness.hpp"
#include "experiments.hpp"
#include "lp/model.hpp"

#include <chrono>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lp {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return s;
}

std::string to_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      if (row[i].is_string()) {
        const auto& v = row[i].get_ref<const std::string&>();
        if (v.find_first_of(",\"\n") == std::string::npos) {
          os << v;
        } else {
          os << '"';
          for (char c : v) os << (c == '"' ? "\"\"" : std::string(1, c));
          os << '"';
        }
      } else
        os << row[i].dump();
    }
    os << '\n';
  }
  return os.str();
}

RateFit fit_rate(const std::vector<long>& n, const std::vector<double>& gap) {
  if (n.size() != gap.size()) throw std::invalid_argument("fit_rate: grid and gaps differ in length");
  RateFit fit;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(gap[i] > 0) || n[i] <= 0) {
      fit.excluded.push_back(n[i]);
      continue;
    }
    fit.grid.push_back(n[i]);
    fit.log_n.push_back(std::log(static_cast<double>(n[i])));
    fit.log_gap.push_back(std::log(gap[i]));
  }
  const auto m = fit.log_n.size();
  if (m < 4) throw std::invalid_argument("fit_rate needs at least 4 points with positive gap");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += fit.log_n[i];
    my += fit.log_gap[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = fit.log_n[i] - mx, dy = fit.log_gap[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0) throw std::invalid_argument("fit_rate needs at least two distinct n");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

std::vector<long> parse_grid(std::string_view text) {
  auto to_long = [](std::string_view s) {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw std::invalid_argument("bad grid value '" + std::string(s) + "'");
    return v;
  };
  std::vector<long> grid;
  if (auto dots = text.find(".."); dots != std::string_view::npos) {
    auto colon = text.find(':');
    const long lo = to_long(text.substr(0, dots));
    const long hi = to_long(text.substr(dots + 2, colon == std::string_view::npos ? text.npos : colon - dots - 2));
    long factor = 2;
    if (colon != std::string_view::npos) {
      const auto kind = text.substr(colon + 1);
      if (kind.rfind("geometric", 0) != 0) throw std::invalid_argument("only geometric ranges are supported");
      if (kind.size() > 10 && kind[9] == 'x') factor = to_long(kind.substr(10));
    }
    if (lo < 1 || hi < lo || factor < 2) throw std::invalid_argument("invalid grid range '" + std::string(text) + "'");
    for (long v = lo; v <= hi; v *= factor) grid.push_back(v);
  } else {
    while (!text.empty()) {
      const auto comma = text.find(',');
      grid.push_back(to_long(text.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      text = text.substr(comma + 1);
    }
  }
  if (grid.empty()) throw std::invalid_argument("grid is empty");
  for (long v : grid)
    if (v < 1) throw std::invalid_argument("grid values must be positive");
  return grid;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& d : detail::registry()) v.push_back(d.name);
    return v;
  }();
  return names;
}

namespace {

const detail::ExperimentDef& find_def(std::string_view name) {
  for (const auto& d : detail::registry())
    if (d.name == name) return d;
  std::string known;
  for (const auto& d : detail::registry()) known += " " + d.name;
  throw std::invalid_argument("unknown experiment '" + std::string(name) + "' (known:" + known + ")");
}

void validate_grid(const Json& cfg, const char* key) {
  if (!cfg.contains(key)) return;
  const auto& g = cfg[key];
  std::vector<long> grid;
  if (g.is_string())
    grid = parse_grid(g.get<std::string>());
  else if (g.is_array())
    for (const auto& v : g) grid.push_back(v.get<long>());
  else
    throw std::invalid_argument(std::string(key) + " must be an array or a range string");
  if (grid.empty()) throw std::invalid_argument(std::string(key) + " is empty");
  for (long v : grid)
    if (v < 1) throw std::invalid_argument(std::string(key) + " values must be positive");
}

// Hessians are stored dense, so configs stay at desk scale.
constexpr int kMaxWeightDim = 512;

void validate_arch(const Json& cfg) {
  if (!cfg.contains("arch") || !cfg["arch"].is_string()) return;
  const auto arch = Architecture::parse(cfg["arch"].get<std::string>());
  if (arch.weight_dim() > kMaxWeightDim)
    throw std::invalid_argument("architecture has " + std::to_string(arch.weight_dim()) + " weights, the cap is " +
                                std::to_string(kMaxWeightDim));
}

}  // namespace

Json default_config(std::string_view experiment) { return find_def(experiment).defaults(); }

Json resolve_config(const Json& config) {
  if (!config.is_object() || !config.contains("experiment"))
    throw std::invalid_argument("config must be an object with an \"experiment\" field");
  Json cfg = default_config(config.at("experiment").get<std::string>());
  cfg.merge_patch(config);
  validate_grid(cfg, "n_grid");
  validate_arch(cfg);
  for (const char* k : {"trials", "cases", "draws", "probes"})
    if (cfg.contains(k) && cfg[k].get<long>() < 1) throw std::invalid_argument(std::string(k) + " must be positive");
  return cfg;
}

RunResult run(const Json& config) {
  const Json cfg = resolve_config(config);
  const auto& def = find_def(cfg.at("experiment").get<std::string>());
  const auto t0 = std::chrono::steady_clock::now();
  auto out = def.run(cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Json assertions = Json::array();
  bool pass = true;
  for (const auto& a : out.assertions) {
    assertions.push_back(
        {{"name", a.name}, {"pass", a.pass}, {"value", a.value}, {"threshold", a.threshold}, {"detail", a.detail}});
    pass = pass && a.pass;
  }
  const std::string canonical_cfg = cfg.dump();
  Json doc;
  doc["schema"] = kSchema;
  doc["experiment"] = def.name;
  doc["config"] = cfg;
  doc["input_hash"] = hex64(fnv1a64(canonical_cfg));
  doc["result"] = out.result;
  doc["assertions"] = assertions;
  doc["pass"] = pass;
  doc["result_hash"] = hex64(fnv1a64(doc.dump()));  // everything above, runtime excluded
  doc["runtime_seconds"] = seconds;
  return {std::move(doc), std::move(out.table)};
}

void write_outputs(const RunResult& r, const std::filesystem::path& json_path, const std::filesystem::path& csv) {
  auto ensure_parent = [](const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  };
  if (!json_path.empty()) {
    ensure_parent(json_path);
    std::ofstream os(json_path);
    if (!os) throw std::runtime_error("cannot write " + json_path.string());
    os << r.document.dump(2) << '\n';
  }
  if (!csv.empty() && !r.table.header.empty()) {
    ensure_parent(csv);
    std::ofstream os(csv);
    if (!os) throw std::runtime_error("cannot write " + csv.string());
    os << to_csv(r.table);
  }
}

}  // namespace lp
