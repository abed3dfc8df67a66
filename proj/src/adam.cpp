#include "g2t/adam.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "g2t/image_io.hpp"

namespace g2t {

namespace {

constexpr char kMagic[8] = {'G', '2', 'T', 'A', 'D', 'A', 'M', '1'};

void put_f64(std::ofstream& f, double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
  f.write(reinterpret_cast<const char*>(&u), 8);
}

double get_f64(std::ifstream& f, const std::string& path) {
  uint64_t u = 0;
  f.read(reinterpret_cast<char*>(&u), 8);
  if (f.gcount() != 8)
    throw DataError(path + ": truncated optimizer state (byte offset " +
                    std::to_string(static_cast<long>(f.tellg())) + ")");
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

bool adam_step(AdamState& state, std::vector<double>& x,
               const std::vector<double>& g,
               const std::vector<double>* lr_scale,
               const std::vector<uint8_t>* active) {
  if (x.size() != g.size() || state.m.size() != x.size() ||
      state.v.size() != x.size())
    throw DataError("adam_step: length mismatch");
  ++state.step_count;
  for (size_t i = 0; i < g.size(); ++i) {
    if (active && !(*active)[i]) continue;
    if (!std::isfinite(g[i])) return false;  // counter already advanced
  }

  const double bc1 = 1.0 - std::pow(state.beta1, state.step_count);
  const double bc2 = 1.0 - std::pow(state.beta2, state.step_count);
  for (size_t i = 0; i < x.size(); ++i) {
    if (active && !(*active)[i]) continue;
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    const double lr = lr_scale ? state.lr * (*lr_scale)[i] : state.lr;
    x[i] -= lr * mhat / (std::sqrt(vhat) + state.eps_adam);
  }
  return true;
}

std::vector<double> field_lr_scales(const ParamLayout& layout) {
  std::vector<double> s(layout.total(), 1.0);
  for (int i = 0; i < layout.count; ++i) {
    for (int c = 0; c < 3; ++c) {
      s[layout.log_scale(i) + c] = 0.5;
      s[layout.rotor(i) + c] = 0.1;
    }
    for (int c = 0; c < 4; ++c) s[layout.rotation(i) + c] = 0.1;
    s[layout.t_center(i)] = 0.5;
    s[layout.t_sigma(i)] = 0.5;
  }
  return s;
}

void write_adam(const std::string& path, const AdamState& state) {
  io_op_note();
  if (state.m.size() != state.v.size())
    throw DataError("write_adam: moment lengths differ");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError(path + ": cannot open for writing");
  f.write(kMagic, 8);
  put_f64(f, static_cast<double>(state.step_count));
  put_f64(f, state.lr);
  put_f64(f, state.beta1);
  put_f64(f, state.beta2);
  put_f64(f, state.eps_adam);
  put_f64(f, static_cast<double>(state.m.size()));
  for (double v : state.m) put_f64(f, v);
  for (double v : state.v) put_f64(f, v);
  if (!f) throw DataError(path + ": write failed");
}

AdamState read_adam(const std::string& path) {
  io_op_note();
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError(path + ": cannot open");
  char magic[8] = {};
  f.read(magic, 8);
  if (f.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError(path + ": bad optimizer-state magic (byte offset 0)");
  AdamState st;
  st.step_count = static_cast<long>(get_f64(f, path));
  st.lr = get_f64(f, path);
  st.beta1 = get_f64(f, path);
  st.beta2 = get_f64(f, path);
  st.eps_adam = get_f64(f, path);
  const double n_raw = get_f64(f, path);
  if (!(n_raw >= 0) || n_raw != std::floor(n_raw) || n_raw > 1e9)
    throw DataError(path + ": bad moment-vector length (byte offset 48)");
  const size_t n = static_cast<size_t>(n_raw);
  st.m.resize(n);
  st.v.resize(n);
  for (size_t i = 0; i < n; ++i) st.m[i] = get_f64(f, path);
  for (size_t i = 0; i < n; ++i) st.v[i] = get_f64(f, path);
  return st;
}

}  // namespace g2t
