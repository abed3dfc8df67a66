#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "g2t/adam.hpp"
#include "g2t/image_io.hpp"
#include "g2t/quat.hpp"
#include "g2t/scene_io.hpp"
#include "test_support.hpp"

using namespace g2t;
using namespace g2t::testsup;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "g2t_io_tests";
    fs::create_directories(d);
    return d;
  }();
  return (dir / name).string();
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void append_be_float(std::string& out, float v) {
  uint32_t u;
  std::memcpy(&u, &v, 4);
  out.push_back(static_cast<char>((u >> 24) & 0xff));
  out.push_back(static_cast<char>((u >> 16) & 0xff));
  out.push_back(static_cast<char>((u >> 8) & 0xff));
  out.push_back(static_cast<char>(u & 0xff));
}

}  // namespace

TEST_CASE("pfm round-trips f32 payloads bit-exactly") {
  std::mt19937_64 rng(31);
  Image map(7, 5, 1);
  for (double& v : map.data)
    v = static_cast<double>(static_cast<float>(normal_unit(rng) * 100));
  const std::string path = scratch("roundtrip.pfm");
  write_pfm(path, map);
  const Image got = read_pfm(path);
  CHECK(got.height == 7);
  CHECK(got.width == 5);
  CHECK(got.data == map.data);
}

TEST_CASE("pfm reads big-endian payloads (positive scale)") {
  // 2x2 map, rows stored bottom-to-top: file row 0 is image row 1.
  std::string bytes = "Pf\n2 2\n1.0\n";
  append_be_float(bytes, 0.125f);   // (y=1, x=0)
  append_be_float(bytes, 7.0f);     // (y=1, x=1)
  append_be_float(bytes, 1.5f);     // (y=0, x=0)
  append_be_float(bytes, -2.25f);   // (y=0, x=1)
  const std::string path = scratch("bigendian.pfm");
  write_bytes(path, bytes);
  const Image got = read_pfm(path);
  CHECK(got.at(0, 0) == 1.5);
  CHECK(got.at(0, 1) == -2.25);
  CHECK(got.at(1, 0) == 0.125);
  CHECK(got.at(1, 1) == 7.0);
}

TEST_CASE("pfm rejects malformed inputs with byte offsets") {
  const std::string p1 = scratch("color.pfm");
  write_bytes(p1, "PF\n2 2\n-1.0\n");
  CHECK_THROWS_WITH_AS(read_pfm(p1), doctest::Contains("color PFM"), DataError);

  const std::string p2 = scratch("zeroscale.pfm");
  write_bytes(p2, "Pf\n2 2\n0\nxxxxxxxxxxxxxxxx");
  CHECK_THROWS_WITH_AS(read_pfm(p2), doctest::Contains("scale"), DataError);

  const std::string p3 = scratch("short.pfm");
  std::string bytes = "Pf\n2 2\n-1.0\n";
  bytes.append(10, '\0');  // needs 16 payload bytes
  write_bytes(p3, bytes);
  CHECK_THROWS_WITH_AS(read_pfm(p3), doctest::Contains("truncated"), DataError);
  CHECK_THROWS_WITH_AS(read_pfm(p3), doctest::Contains("byte offset"), DataError);

  const std::string p4 = scratch("badwidth.pfm");
  write_bytes(p4, "Pf\nx 2\n-1.0\n");
  CHECK_THROWS_WITH_AS(read_pfm(p4), doctest::Contains("width"), DataError);
}

TEST_CASE("ppm quantizes half-to-even and clamps") {
  Image rgb(1, 4, 3, 0.0);
  rgb.at(0, 0, 0) = 0.5 / 255.0;   // -> 0 (half to even)
  rgb.at(0, 0, 1) = 1.5 / 255.0;   // -> 2
  rgb.at(0, 0, 2) = 2.5 / 255.0;   // -> 2
  rgb.at(0, 1, 0) = 3.5 / 255.0;   // -> 4
  rgb.at(0, 1, 1) = -0.25;         // clamp -> 0
  rgb.at(0, 1, 2) = 1.75;          // clamp -> 255
  rgb.at(0, 2, 0) = 200.4 / 255.0; // -> 200
  rgb.at(0, 2, 1) = 200.6 / 255.0; // -> 201
  const std::string path = scratch("quant.ppm");
  write_ppm(path, rgb);

  const std::string bytes = read_bytes(path);
  const size_t payload = bytes.size() - 11;  // "P6\n4 1\n255\n" header
  REQUIRE(payload == 12);
  const auto* px = reinterpret_cast<const unsigned char*>(bytes.data() + 11);
  CHECK(px[0] == 0);
  CHECK(px[1] == 2);
  CHECK(px[2] == 2);
  CHECK(px[3] == 4);
  CHECK(px[4] == 0);
  CHECK(px[5] == 255);
  CHECK(px[6] == 200);
  CHECK(px[7] == 201);

  const Image back = read_ppm(path);
  CHECK(back.at(0, 0, 1) == 2.0 / 255.0);
  CHECK(back.at(0, 1, 2) == 1.0);
}

TEST_CASE("ppm read errors carry position information") {
  const std::string p1 = scratch("magic.ppm");
  write_bytes(p1, "P5\n2 2\n255\n");
  CHECK_THROWS_WITH_AS(read_ppm(p1), doctest::Contains("P6"), DataError);

  const std::string p2 = scratch("maxval.ppm");
  write_bytes(p2, "P6\n2 2\n65535\n");
  CHECK_THROWS_WITH_AS(read_ppm(p2), doctest::Contains("maxval"), DataError);

  const std::string p3 = scratch("shortpix.ppm");
  write_bytes(p3, "P6\n2 2\n255\nabc");
  CHECK_THROWS_WITH_AS(read_ppm(p3), doctest::Contains("truncated"), DataError);
}

TEST_CASE("image io ticks the global operation counter") {
  const std::string path = scratch("count.ppm");
  write_ppm(path, Image(2, 2, 3, 0.5));
  io_op_reset();
  (void)read_ppm(path);
  write_pfm(scratch("count.pfm"), Image(2, 2, 1, 1.0));
  CHECK(io_op_count() == 2);
}

TEST_CASE("scene files round-trip every parameter exactly") {
  GaussianField field;
  for (int i = 0; i < 3; ++i) {
    GaussianPrimitive p;
    p.center = Eigen::Vector3d(1.0 / 3.0, -M_PI, 1e-17 + i);
    p.log_scale = Eigen::Vector3d(0.1 * i, -0.7, 2.0 / 7.0);
    p.rotation = quat_normalize(Eigen::Vector4d(1, 0.2 * i, -0.3, 0.41));
    p.opacity_logit = -1.234567890123456789 + i;
    p.sh_coeffs.assign(4, Eigen::Vector3d::Zero());
    for (int k = 0; k < 4; ++k)
      p.sh_coeffs[k] = Eigen::Vector3d(0.01 * k + i, std::sqrt(2.0), -1.0 / 7);
    p.velocity = Eigen::Vector3d(0.5, std::exp(1.0), -3e-5);
    p.rotor_rate = Eigen::Vector3d(1e-300, 0.25, -0.125);
    p.t_center = 0.1 + 0.3 * i;
    p.t_sigma = 0.7;
    field.primitives.push_back(p);
  }
  const std::string path = scratch("roundtrip.scene");
  write_scene(path, field);
  const GaussianField got = read_scene(path);
  REQUIRE(got.count() == 3);
  for (int i = 0; i < 3; ++i) {
    const auto& a = field.primitives[i];
    const auto& b = got.primitives[i];
    CHECK(a.center == b.center);
    CHECK(a.log_scale == b.log_scale);
    CHECK(a.rotation == b.rotation);
    CHECK(a.opacity_logit == b.opacity_logit);
    REQUIRE(b.sh_coeffs.size() == 4);
    for (int k = 0; k < 4; ++k) CHECK(a.sh_coeffs[k] == b.sh_coeffs[k]);
    CHECK(a.velocity == b.velocity);
    CHECK(a.rotor_rate == b.rotor_rate);
    CHECK(a.t_center == b.t_center);
    CHECK(a.t_sigma == b.t_sigma);
  }
}

TEST_CASE("scene reader rejects malformed files") {
  const std::string p1 = scratch("header.scene");
  write_bytes(p1, "who-knows v9 1 0\n");
  CHECK_THROWS_WITH_AS(read_scene(p1), doctest::Contains("header"), DataError);

  GaussianField field;
  field.primitives.emplace_back();
  field.primitives.emplace_back();
  const std::string p2 = scratch("truncated.scene");
  write_scene(p2, field);
  std::string bytes = read_bytes(p2);
  bytes.erase(bytes.rfind('\n', bytes.size() - 2) + 1);  // drop last line
  write_bytes(p2, bytes);
  CHECK_THROWS_WITH_AS(read_scene(p2), doctest::Contains("truncated"), DataError);

  const std::string p3 = scratch("badnum.scene");
  write_scene(p3, field);
  bytes = read_bytes(p3);
  const size_t pos = bytes.find("0.5");  // t_center of primitive 1
  REQUIRE(pos != std::string::npos);
  bytes.replace(pos, 3, "bog");
  write_bytes(p3, bytes);
  CHECK_THROWS_AS(read_scene(p3), DataError);

  GaussianField mixed;
  mixed.primitives.emplace_back();
  mixed.primitives.emplace_back();
  mixed.primitives[1].sh_coeffs.assign(4, Eigen::Vector3d::Zero());
  CHECK_THROWS_WITH_AS(write_scene(scratch("mixed.scene"), mixed),
                       doctest::Contains("mixed"), DataError);
}

TEST_CASE("scene files tolerate comments and report count mismatches") {
  const std::string path = scratch("comments.scene");
  GaussianField field;
  field.primitives.emplace_back();
  write_scene(path, field);
  std::string bytes = "# leading comment\n" + read_bytes(path);
  write_bytes(path, bytes);
  CHECK(read_scene(path).count() == 1);

  const std::string p2 = scratch("shortline.scene");
  write_bytes(p2, "g2t-scene v1 1 0\n1 2 3\n");
  CHECK_THROWS_WITH_AS(read_scene(p2), doctest::Contains("expected"), DataError);
}

TEST_CASE("camera files round-trip pose and intrinsics exactly") {
  std::vector<Camera> cams(2);
  cams[0].fx = 101.5;
  cams[0].fy = 99.25;
  cams[0].cx = 31.75;
  cams[0].cy = 23.5;
  cams[0].rot_wc = quat_to_mat(exp_quat(Eigen::Vector3d(0.3, -0.2, 0.9)));
  cams[0].t_wc = Eigen::Vector3d(1.0 / 3, -2.5, 0.75);
  cams[1] = cams[0];
  cams[1].t_wc.x() += 0.125;
  for (auto& c : cams) {
    c.width = 64;
    c.height = 48;
  }
  const std::string path = scratch("cameras.txt");
  write_cameras(path, cams);
  const std::vector<Camera> got = read_cameras(path, 64, 48);
  REQUIRE(got.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(got[i].fx == cams[i].fx);
    CHECK(got[i].fy == cams[i].fy);
    CHECK(got[i].cx == cams[i].cx);
    CHECK(got[i].cy == cams[i].cy);
    CHECK(got[i].rot_wc == cams[i].rot_wc);
    CHECK(got[i].t_wc == cams[i].t_wc);
    CHECK(got[i].width == 64);
    CHECK(got[i].height == 48);
  }
  const std::string p2 = scratch("badcam.txt");
  write_bytes(p2, "1 2 3 4 5\n");
  CHECK_THROWS_WITH_AS(read_cameras(p2, 4, 4), doctest::Contains("16"),
                       DataError);
}

TEST_CASE("key=value files round-trip") {
  KeyValues kv;
  kv["frames"] = "12";
  kv["noise"] = "0.02";
  kv["motion"] = "orbit";
  kv["d_min_00003"] = "1.2499999999999998";
  const std::string path = scratch("spec.txt");
  write_key_values(path, kv);
  CHECK(read_key_values(path) == kv);

  const std::string p2 = scratch("badkv.txt");
  write_bytes(p2, "frames 12\n");
  CHECK_THROWS_WITH_AS(read_key_values(p2), doctest::Contains("key=value"),
                       DataError);
}

TEST_CASE("optimizer state sidecar round-trips exactly") {
  std::mt19937_64 rng(32);
  AdamState state(6);
  for (int i = 0; i < 6; ++i) {
    state.m[i] = normal_unit(rng);
    state.v[i] = std::abs(normal_unit(rng));
  }
  state.step_count = 42;
  state.lr = 3.25e-4;
  const std::string path = scratch("state.adam");
  write_adam(path, state);
  const AdamState got = read_adam(path);
  CHECK(got.step_count == 42);
  CHECK(got.lr == state.lr);
  CHECK(got.beta1 == state.beta1);
  CHECK(got.beta2 == state.beta2);
  CHECK(got.eps_adam == state.eps_adam);
  CHECK(got.m == state.m);
  CHECK(got.v == state.v);
}

TEST_CASE("optimizer state reader rejects bad magic and truncation") {
  AdamState state(4);
  const std::string path = scratch("bad.adam");
  write_adam(path, state);
  std::string bytes = read_bytes(path);
  std::string clipped = bytes.substr(0, 30);
  write_bytes(path, clipped);
  CHECK_THROWS_WITH_AS(read_adam(path), doctest::Contains("truncated"),
                       DataError);

  bytes[0] = 'X';
  write_bytes(path, bytes);
  CHECK_THROWS_WITH_AS(read_adam(path), doctest::Contains("magic"), DataError);
}
