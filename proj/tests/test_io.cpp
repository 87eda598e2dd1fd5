#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "tubal/io.hpp"

namespace {

using namespace tubal;
namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tubal_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::io_error;
}

TEST_F(IoTest, TensorRoundTripIsBitExact) {
  const Tensor3 a = oracle::gaussian({3, 4, 5}, 1);
  io::write_tensor(dir_ / "a.t3d", a);
  const Tensor3 b = io::read_tensor(dir_ / "a.t3d");
  ASSERT_EQ(b.dims(), a.dims());
  EXPECT_EQ(std::memcmp(a.data().data(), b.data().data(), a.size() * 8), 0);
  EXPECT_EQ(fs::file_size(dir_ / "a.t3d"), 28u + 60u * 8u);
  EXPECT_FALSE(fs::exists(dir_ / "a.t3d.tmp"));
}

TEST(TensorFormat, HeaderLayout) {
  Tensor3 a(2, 1, 1);
  a(0, 0, 0) = 1.0;
  a(1, 0, 0) = -2.0;
  const std::string bytes = io::encode_tensor(a);
  ASSERT_EQ(bytes.size(), 44u);
  EXPECT_EQ(bytes.substr(0, 4), "T3D1");
  // little-endian u64 2, 1, 1
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 1);
  EXPECT_EQ(static_cast<unsigned char>(bytes[20]), 1);
  for (int b = 5; b < 12; ++b) EXPECT_EQ(bytes[b], 0);
  double second = 0.0;
  std::memcpy(&second, bytes.data() + 36, 8);
  EXPECT_EQ(second, -2.0);
}

TEST(TensorFormat, Errors) {
  std::string good = io::encode_tensor(Tensor3(2, 2, 2));
  std::string wrong = good;
  wrong[0] = 'X';
  EXPECT_EQ(code_of([&] { (void)io::decode_tensor(wrong); }), Errc::bad_magic);
  EXPECT_EQ(code_of([&] { (void)io::decode_tensor("T3"); }), Errc::bad_magic);
  EXPECT_EQ(code_of([&] { (void)io::decode_tensor(good.substr(0, 20)); }), Errc::truncated_payload);
  EXPECT_EQ(code_of([&] { (void)io::decode_tensor(good.substr(0, 28 + 7 * 8)); }), Errc::truncated_payload);
  EXPECT_EQ(code_of([&] { (void)io::decode_tensor(good + "x"); }), Errc::truncated_payload);

  std::string huge = good.substr(0, 28);
  const std::uint64_t big = std::uint64_t{1} << 40;
  for (int i = 0; i < 3; ++i) std::memcpy(huge.data() + 4 + 8 * i, &big, 8);
  EXPECT_EQ(code_of([&] { (void)io::decode_tensor(huge); }), Errc::dim_overflow);
  std::string zero = good.substr(0, 28);
  std::memset(zero.data() + 12, 0, 8);
  EXPECT_EQ(code_of([&] { (void)io::decode_tensor(zero); }), Errc::dim_overflow);
}

TEST_F(IoTest, MissingFileIsIoError) {
  EXPECT_EQ(code_of([&] { (void)io::read_tensor(dir_ / "nope.t3d"); }), Errc::io_error);
  EXPECT_EQ(code_of([&] { io::write_tensor(dir_ / "no_dir" / "x.t3d", Tensor3(1, 1, 1)); }), Errc::io_error);
  EXPECT_FALSE(fs::exists(dir_ / "no_dir"));
}

TEST_F(IoTest, MaskRoundTrip) {
  const auto m = sample_mask({4, 3, 5}, 0.35, SamplingModel::bernoulli, 77);
  io::write_mask(dir_ / "m.txt", m);
  EXPECT_EQ(io::read_mask(dir_ / "m.txt"), m);
  const auto u = sample_mask({4, 3, 5}, 1.0 / 3.0, SamplingModel::uniform_without_replacement, 78);
  EXPECT_EQ(io::decode_mask(io::encode_mask(u)), u);
}

TEST(MaskFormat, OneBasedTriples) {
  const Dims d{2, 3, 2};
  const ObservationMask m(d, {0, d.size() - 1}, SamplingModel::bernoulli, 0.25, 9);
  EXPECT_EQ(io::encode_mask(m), "dims 2 3 2\nmodel bernoulli\nrate 0.25\nseed 9\n1 1 1\n2 3 2\n");
  const auto back = io::decode_mask("# comment\ndims 2 3 2\nmodel uniform\nrate 0.5\nseed 3\n\n2 1 1\n1 2 2\n");
  EXPECT_TRUE(back.contains(1, 0, 0));
  EXPECT_TRUE(back.contains(0, 1, 1));
  EXPECT_EQ(back.size(), 2u);
  EXPECT_EQ(back.model(), SamplingModel::uniform_without_replacement);
}

TEST(MaskFormat, Errors) {
  EXPECT_EQ(code_of([] { (void)io::decode_mask("1 1 1\n"); }), Errc::unsupported_format);
  EXPECT_EQ(code_of([] { (void)io::decode_mask("dims 2 2 2\n3 1 1\n"); }), Errc::index_out_of_bounds);
  EXPECT_EQ(code_of([] { (void)io::decode_mask("dims 2 2 2\n0 1 1\n"); }), Errc::index_out_of_bounds);
  EXPECT_EQ(code_of([] { (void)io::decode_mask("dims 2 2 2\n1 1\n"); }), Errc::unsupported_format);
  EXPECT_EQ(code_of([] { (void)io::decode_mask("model bernoulli\n"); }), Errc::unsupported_format);
  EXPECT_EQ(code_of([] { (void)io::decode_mask("dims 2 2 2\n1 1 1\n1 1 1\n"); }), Errc::invalid_spec);
}

std::string ppm(std::size_t w, std::size_t h, const std::vector<unsigned char>& rgb) {
  std::string s = "P6\n# made by hand\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  s.append(rgb.begin(), rgb.end());
  return s;
}

TEST(Ppm, WhitePixel) {
  const Tensor3 img = io::decode_ppm(ppm(1, 1, {255, 255, 255}));
  ASSERT_EQ(img.dims(), (Dims{1, 1, 3}));
  for (double v : img.values()) EXPECT_EQ(v, 1.0);
}

TEST(Ppm, RedImageFillsFirstSlice) {
  const Tensor3 img = io::decode_ppm(ppm(2, 2, {255, 0, 0, 255, 0, 0, 255, 0, 0, 255, 0, 0}));
  EXPECT_EQ(Eigen::MatrixXd(img.slice(0)), Eigen::MatrixXd::Ones(2, 2));
  EXPECT_EQ(Eigen::MatrixXd(img.slice(1)), Eigen::MatrixXd::Zero(2, 2));
  EXPECT_EQ(Eigen::MatrixXd(img.slice(2)), Eigen::MatrixXd::Zero(2, 2));
}

TEST(Ppm, RowsAreHeight) {
  // 3 wide, 1 tall: the pixel at column 2 is blue
  const Tensor3 img = io::decode_ppm(ppm(3, 1, {0, 0, 0, 0, 0, 0, 0, 0, 255}));
  ASSERT_EQ(img.dims(), (Dims{1, 3, 3}));
  EXPECT_EQ(img(0, 2, 2), 1.0);
}

TEST_F(IoTest, PpmQuantizationIsIdempotent) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.1, 1.1);
  Tensor3 img(4, 6, 3);
  for (auto& v : img.data()) v = u(rng);
  io::write_ppm(dir_ / "a.ppm", img);
  const Tensor3 once = io::read_ppm(dir_ / "a.ppm");
  io::write_ppm(dir_ / "b.ppm", once);
  EXPECT_EQ(io::read_ppm(dir_ / "b.ppm"), once);
  EXPECT_EQ(io::read_file(dir_ / "a.ppm"), io::read_file(dir_ / "b.ppm"));
  for (std::size_t n = 0; n < img.size(); ++n) EXPECT_LE(std::abs(once[n] - std::clamp(img[n], 0.0, 1.0)), 0.5 / 255 + 1e-12);
}

TEST(Ppm, Errors) {
  EXPECT_EQ(code_of([] { (void)io::decode_ppm("P3\n1 1\n255\n1 2 3\n"); }), Errc::unsupported_format);
  EXPECT_EQ(code_of([] { (void)io::decode_ppm("P6\n1 1\n65535\n"); }), Errc::unsupported_format);
  EXPECT_EQ(code_of([] { (void)io::decode_ppm("P6\nx y\n255\n"); }), Errc::unsupported_format);
  EXPECT_EQ(code_of([] { (void)io::decode_ppm(ppm(2, 2, {1, 2, 3})); }), Errc::truncated_payload);
  EXPECT_EQ(code_of([] { (void)io::encode_ppm(Tensor3(2, 2, 2)); }), Errc::dimension_mismatch);
}

PhaseGrid grid_of(double fill) {
  PhaseGrid g{{1, 2, 3}, {0.0, 0.1}, 0.5, 4, std::vector<double>(6, fill)};
  return g;
}

std::string pixels(const std::string& pgm) {
  std::size_t pos = 0;
  for (int t = 0; t < 4; ++t) (void)io::detail::pnm_token(pgm, pos);
  return pgm.substr(pos + 1);
}

TEST(Heatmap, GrayLevels) {
  EXPECT_EQ(pixels(io::encode_heatmap(grid_of(1.0))), std::string(6, static_cast<char>(255)));
  EXPECT_EQ(pixels(io::encode_heatmap(grid_of(0.0))), std::string(6, '\0'));
  EXPECT_EQ(io::gray_level(0.5), 128);
  EXPECT_EQ(io::gray_level(0.25), 64);
  EXPECT_EQ(io::gray_level(0.75), 191);
}

TEST(Heatmap, OrientationLargestGammaOnTop) {
  PhaseGrid g = grid_of(0.0);
  g.success[0 * 2 + 1] = 1.0;  // rank 1, gamma 0.1
  const std::string px = pixels(io::encode_heatmap(g));
  EXPECT_EQ(io::encode_heatmap(g).substr(0, 9), "P5\n3 2\n25");
  EXPECT_EQ(static_cast<unsigned char>(px[0]), 255);
  EXPECT_EQ(static_cast<unsigned char>(px[3]), 0);
}

TEST_F(IoTest, EmitWritesImageAndCsv) {
  PhaseGrid g = grid_of(0.5);
  io::emit_heatmap(g, dir_ / "grid.pgm");
  EXPECT_TRUE(fs::exists(dir_ / "grid.pgm"));
  const std::string csv = io::read_file(dir_ / "grid.pgm.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "rank,gamma,rho,trials,success");
  EXPECT_NE(csv.find("3,0.10000000000000001,0.5,4,0.5\n"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  EXPECT_EQ(code_of([&] { io::emit_heatmap(g, dir_ / "missing" / "g.pgm"); }), Errc::io_error);
}

}  // namespace
