#include "lp/model.hpp"

#include <algorithm>
#include <charconv>

namespace lp {

std::string to_string(Activation a) { return a == Activation::Linear ? "linear" : "sigmoid"; }

Activation parse_activation(std::string_view name) {
  if (name == "linear") return Activation::Linear;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

Architecture::Architecture(std::vector<int> dims, Activation activation)
    : dims_(std::move(dims)), activation_(activation) {
  if (dims_.size() < 3)
    throw std::invalid_argument("architecture needs at least two layers (l >= 2), got " +
                                std::to_string(dims_.empty() ? 0 : dims_.size() - 1));
  for (int d : dims_)
    if (d <= 0) throw std::invalid_argument("layer widths must be positive");
}

Architecture Architecture::parse(std::string_view text, Activation fallback) {
  Activation act = fallback;
  if (auto colon = text.find(':'); colon != std::string_view::npos) {
    act = parse_activation(text.substr(colon + 1));
    text = text.substr(0, colon);
  }
  std::vector<int> dims;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto tok = text.substr(0, comma);
    int value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
      throw std::invalid_argument("bad layer width '" + std::string(tok) + "'");
    dims.push_back(value);
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return Architecture(std::move(dims), act);
}

std::string Architecture::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(dims_[i]);
  }
  return s + ":" + lp::to_string(activation_);
}

int Architecture::layer_offset(int j) const {
  int off = 0;
  for (int k = 1; k < j; ++k) off += layer_size(k);
  return off;
}

int Architecture::max_width() const { return *std::max_element(dims_.begin(), dims_.end()); }

int Architecture::max_layer_size() const {
  int m = 0;
  for (int j = 1; j <= depth(); ++j) m = std::max(m, layer_size(j));
  return m;
}

}  // namespace lp
