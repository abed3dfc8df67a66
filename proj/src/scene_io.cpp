#include "g2t/scene_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "g2t/image_io.hpp"

namespace g2t {

namespace {

namespace fs = std::filesystem;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Strip comment and surrounding whitespace; empty result means skip the line.
std::string clean_line(const std::string& raw) {
  std::string s = raw.substr(0, raw.find('#'));
  const size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<double> parse_doubles(const std::string& line,
                                  const std::string& path,
                                  std::streamoff offset) {
  std::vector<double> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    try {
      size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw DataError(path + ": bad number '" + tok + "' (byte offset " +
                      std::to_string(offset) + ")");
    }
  }
  return out;
}

}  // namespace

std::string frame_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", index);
  return buf;
}

void write_scene(const std::string& path, const GaussianField& field) {
  io_op_note();
  const int sh_dim = field.count() > 0 ? field.primitives[0].sh_dim() : 1;
  const int sh_degree = sh_dim == 4 ? 1 : 0;
  std::ofstream f(path);
  if (!f) throw DataError(path + ": cannot open for writing");
  f << "g2t-scene v1 " << field.count() << " " << sh_degree << "\n";
  f << "# center(3) log_scale(3) rotation(4) opacity_logit sh(" << 3 * sh_dim
    << ") velocity(3) rotor_rate(3) t_center t_sigma\n";
  for (const GaussianPrimitive& p : field.primitives) {
    if (p.sh_dim() != sh_dim)
      throw DataError("write_scene: mixed SH degrees in one field");
    std::vector<double> vals;
    vals.reserve(19 + 3 * sh_dim);
    for (int c = 0; c < 3; ++c) vals.push_back(p.center[c]);
    for (int c = 0; c < 3; ++c) vals.push_back(p.log_scale[c]);
    for (int c = 0; c < 4; ++c) vals.push_back(p.rotation[c]);
    vals.push_back(p.opacity_logit);
    for (int k = 0; k < sh_dim; ++k)
      for (int c = 0; c < 3; ++c) vals.push_back(p.sh_coeffs[k][c]);
    for (int c = 0; c < 3; ++c) vals.push_back(p.velocity[c]);
    for (int c = 0; c < 3; ++c) vals.push_back(p.rotor_rate[c]);
    vals.push_back(p.t_center);
    vals.push_back(p.t_sigma);
    for (size_t i = 0; i < vals.size(); ++i)
      f << (i ? " " : "") << fmt17(vals[i]);
    f << "\n";
  }
  if (!f) throw DataError(path + ": write failed");
}

GaussianField read_scene(const std::string& path) {
  io_op_note();
  std::ifstream f(path);
  if (!f) throw DataError(path + ": cannot open");
  std::string raw;
  std::streamoff offset = 0;

  // header
  std::string header;
  while (std::getline(f, raw)) {
    header = clean_line(raw);
    if (!header.empty()) break;
    offset = f.tellg();
  }
  std::istringstream hs(header);
  std::string magic, version;
  long count = -1;
  int sh_degree = -1;
  hs >> magic >> version >> count >> sh_degree;
  if (magic != "g2t-scene" || version != "v1" || hs.fail())
    throw DataError(path + ": bad scene header '" + header + "' (byte offset " +
                    std::to_string(offset) + ")");
  if (count < 0 || (sh_degree != 0 && sh_degree != 1))
    throw DataError(path + ": bad count or SH degree (byte offset " +
                    std::to_string(offset) + ")");

  const int sh_dim = sh_degree == 1 ? 4 : 1;
  const size_t want = 19 + 3 * static_cast<size_t>(sh_dim);
  GaussianField field;
  field.primitives.reserve(count);
  offset = f.tellg();
  while (static_cast<long>(field.primitives.size()) < count &&
         std::getline(f, raw)) {
    const std::string line = clean_line(raw);
    if (line.empty()) {
      offset = f.tellg();
      continue;
    }
    const std::vector<double> v = parse_doubles(line, path, offset);
    if (v.size() != want)
      throw DataError(path + ": expected " + std::to_string(want) +
                      " fields, got " + std::to_string(v.size()) +
                      " (byte offset " + std::to_string(offset) + ")");
    GaussianPrimitive p;
    size_t i = 0;
    for (int c = 0; c < 3; ++c) p.center[c] = v[i++];
    for (int c = 0; c < 3; ++c) p.log_scale[c] = v[i++];
    for (int c = 0; c < 4; ++c) p.rotation[c] = v[i++];
    p.opacity_logit = v[i++];
    p.sh_coeffs.resize(sh_dim);
    for (int k = 0; k < sh_dim; ++k)
      for (int c = 0; c < 3; ++c) p.sh_coeffs[k][c] = v[i++];
    for (int c = 0; c < 3; ++c) p.velocity[c] = v[i++];
    for (int c = 0; c < 3; ++c) p.rotor_rate[c] = v[i++];
    p.t_center = v[i++];
    p.t_sigma = v[i++];
    field.primitives.push_back(std::move(p));
    offset = f.tellg();
  }
  if (static_cast<long>(field.primitives.size()) != count)
    throw DataError(path + ": truncated scene, expected " +
                    std::to_string(count) + " primitives, got " +
                    std::to_string(field.primitives.size()) +
                    " (byte offset " + std::to_string(offset) + ")");
  return field;
}

void write_cameras(const std::string& path, const std::vector<Camera>& cams) {
  io_op_note();
  std::ofstream f(path);
  if (!f) throw DataError(path + ": cannot open for writing");
  for (const Camera& c : cams) {
    std::vector<double> vals = {c.fx, c.fy, c.cx, c.cy};
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) vals.push_back(c.rot_wc(r, k));
      vals.push_back(c.t_wc[r]);
    }
    for (size_t i = 0; i < vals.size(); ++i)
      f << (i ? " " : "") << fmt17(vals[i]);
    f << "\n";
  }
  if (!f) throw DataError(path + ": write failed");
}

std::vector<Camera> read_cameras(const std::string& path, int width,
                                 int height) {
  io_op_note();
  std::ifstream f(path);
  if (!f) throw DataError(path + ": cannot open");
  std::vector<Camera> cams;
  std::string raw;
  std::streamoff offset = 0;
  while (std::getline(f, raw)) {
    const std::string line = clean_line(raw);
    if (line.empty()) {
      offset = f.tellg();
      continue;
    }
    const std::vector<double> v = parse_doubles(line, path, offset);
    if (v.size() != 16)
      throw DataError(path + ": camera line needs 16 numbers, got " +
                      std::to_string(v.size()) + " (byte offset " +
                      std::to_string(offset) + ")");
    Camera c;
    c.fx = v[0];
    c.fy = v[1];
    c.cx = v[2];
    c.cy = v[3];
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) c.rot_wc(r, k) = v[4 + r * 4 + k];
      c.t_wc[r] = v[4 + r * 4 + 3];
    }
    c.width = width;
    c.height = height;
    c.validate();
    cams.push_back(c);
    offset = f.tellg();
  }
  return cams;
}

void write_key_values(const std::string& path, const KeyValues& kv) {
  io_op_note();
  std::ofstream f(path);
  if (!f) throw DataError(path + ": cannot open for writing");
  for (const auto& [k, v] : kv) f << k << "=" << v << "\n";
  if (!f) throw DataError(path + ": write failed");
}

KeyValues read_key_values(const std::string& path) {
  io_op_note();
  std::ifstream f(path);
  if (!f) throw DataError(path + ": cannot open");
  KeyValues kv;
  std::string raw;
  std::streamoff offset = 0;
  while (std::getline(f, raw)) {
    const std::string line = clean_line(raw);
    if (line.empty()) {
      offset = f.tellg();
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw DataError(path + ": expected key=value, got '" + line +
                      "' (byte offset " + std::to_string(offset) + ")");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
    offset = f.tellg();
  }
  return kv;
}

void write_dataset(const std::string& dir, const Dataset& ds) {
  const int n = ds.frame_count();
  if (static_cast<int>(ds.priors.size()) != n ||
      static_cast<int>(ds.cameras.size()) != n)
    throw DataError("write_dataset: frames, priors, cameras must align");
  fs::create_directories(fs::path(dir) / "frames");
  fs::create_directories(fs::path(dir) / "depth_star");
  fs::create_directories(fs::path(dir) / "conf");
  fs::create_directories(fs::path(dir) / "mask");
  if (!ds.depth_true.empty())
    fs::create_directories(fs::path(dir) / "depth_true");

  KeyValues kv = ds.spec;
  for (int i = 0; i < n; ++i) {
    const std::string name = frame_name(i + 1);
    write_ppm((fs::path(dir) / "frames" / (name + ".ppm")).string(),
              ds.frames[i]);
    write_pfm((fs::path(dir) / "depth_star" / (name + ".pfm")).string(),
              ds.priors[i].depth_star);
    write_pfm((fs::path(dir) / "conf" / (name + ".pfm")).string(),
              ds.priors[i].confidence);
    write_pfm((fs::path(dir) / "mask" / (name + ".pfm")).string(),
              ds.priors[i].instrument_mask);
    if (!ds.depth_true.empty())
      write_pfm((fs::path(dir) / "depth_true" / (name + ".pfm")).string(),
                ds.depth_true[i]);
    kv["d_min_" + name] = fmt17(ds.priors[i].d_min);
    kv["d_max_" + name] = fmt17(ds.priors[i].d_max);
  }
  write_cameras((fs::path(dir) / "cameras.txt").string(), ds.cameras);
  kv["frames"] = std::to_string(n);
  if (n > 0) {
    kv["width"] = std::to_string(ds.frames[0].width);
    kv["height"] = std::to_string(ds.frames[0].height);
  }
  write_key_values((fs::path(dir) / "spec.txt").string(), kv);
}

Dataset read_dataset(const std::string& dir) {
  Dataset ds;
  ds.spec = read_key_values((fs::path(dir) / "spec.txt").string());
  const auto need = [&](const char* key) -> std::string {
    auto it = ds.spec.find(key);
    if (it == ds.spec.end())
      throw DataError(dir + "/spec.txt: missing key '" + std::string(key) + "'");
    return it->second;
  };
  const int n = std::stoi(need("frames"));
  const int w = std::stoi(need("width"));
  const int h = std::stoi(need("height"));
  if (n < 1) throw DataError(dir + "/spec.txt: frames must be >= 1");

  ds.cameras = read_cameras((fs::path(dir) / "cameras.txt").string(), w, h);
  if (static_cast<int>(ds.cameras.size()) != n)
    throw DataError(dir + "/cameras.txt: expected " + std::to_string(n) +
                    " cameras, got " + std::to_string(ds.cameras.size()));

  const bool has_true = fs::exists(fs::path(dir) / "depth_true");
  for (int i = 0; i < n; ++i) {
    const std::string name = frame_name(i + 1);
    ds.frames.push_back(
        read_ppm((fs::path(dir) / "frames" / (name + ".ppm")).string()));
    PriorFrame prior;
    prior.depth_star =
        read_pfm((fs::path(dir) / "depth_star" / (name + ".pfm")).string());
    prior.confidence =
        read_pfm((fs::path(dir) / "conf" / (name + ".pfm")).string());
    prior.instrument_mask =
        read_pfm((fs::path(dir) / "mask" / (name + ".pfm")).string());
    prior.d_min = std::stod(need(("d_min_" + name).c_str()));
    prior.d_max = std::stod(need(("d_max_" + name).c_str()));
    ds.priors.push_back(std::move(prior));
    if (has_true)
      ds.depth_true.push_back(
          read_pfm((fs::path(dir) / "depth_true" / (name + ".pfm")).string()));
  }
  return ds;
}

}  // namespace g2t
