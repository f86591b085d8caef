#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "tca/data.hpp"
#include "tca/stats.hpp"

using namespace tca;
using data::Dataset;

namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("tca_data_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                                 ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void be32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<unsigned char>(v >> s));
}

// Hand-built IDX pair: n images of 2x2, pixel values given, labels given.
void write_tiny_idx(const std::string& img, const std::string& lab, const std::vector<unsigned char>& pixels,
                    const std::vector<unsigned char>& labels, std::uint32_t n_img, std::uint32_t n_lab,
                    std::uint32_t img_magic = 0x803) {
  std::vector<unsigned char> a, b;
  be32(a, img_magic);
  be32(a, n_img);
  be32(a, 2);
  be32(a, 2);
  a.insert(a.end(), pixels.begin(), pixels.end());
  be32(b, 0x801);
  be32(b, n_lab);
  b.insert(b.end(), labels.begin(), labels.end());
  write_bytes(img, a);
  write_bytes(lab, b);
}

// 3 classes, labels cycle 3,8,9,3,8,9,... ; pixel value encodes the row.
Dataset cyclic(std::size_t n) {
  Dataset ds;
  ds.X.resize(static_cast<Eigen::Index>(n), 4);
  for (std::size_t s = 0; s < n; ++s) {
    ds.X.row(static_cast<Eigen::Index>(s)).setConstant(static_cast<double>(s) / static_cast<double>(n));
    ds.y.push_back(std::vector<int>{3, 8, 9}[s % 3]);
  }
  ds.classes = {3, 8, 9};
  return ds;
}

}  // namespace

TEST(LoadIdx, ScalesPixelsExactly) {
  TempDir dir;
  write_tiny_idx(dir.file("i"), dir.file("l"), {0x00, 0xFF, 0x80, 0x01, 0xFF, 0xFF, 0x00, 0x00}, {8, 3}, 2, 2);
  const auto ds = data::load_idx(dir.file("i"), dir.file("l"));
  ASSERT_EQ(ds.size(), 2u);
  ASSERT_EQ(ds.dim(), 4);
  EXPECT_EQ(ds.X(0, 1), 1.0);
  EXPECT_EQ(ds.X(0, 0), 0.0);
  EXPECT_EQ(ds.X(0, 2), 128.0 / 255.0);
  EXPECT_EQ(ds.y, (std::vector<int>{8, 3}));
  EXPECT_EQ(ds.classes, (std::vector<int>{3, 8}));
  EXPECT_NO_THROW(ds.validate());
}

TEST(LoadIdx, DistinctErrors) {
  TempDir dir;
  write_tiny_idx(dir.file("i"), dir.file("l"), std::vector<unsigned char>(8, 0), {1, 2}, 2, 2, 0x802);
  EXPECT_THROW(data::load_idx(dir.file("i"), dir.file("l")), bad_magic_error);

  write_tiny_idx(dir.file("i"), dir.file("l"), std::vector<unsigned char>(8, 0), {1, 2, 3}, 2, 3);
  EXPECT_THROW(data::load_idx(dir.file("i"), dir.file("l")), count_mismatch_error);

  // header claims 2 images, only 5 pixel bytes present: 16 + 5 = 21 bytes
  write_tiny_idx(dir.file("i"), dir.file("l"), std::vector<unsigned char>(5, 0), {1, 2}, 2, 2);
  try {
    data::load_idx(dir.file("i"), dir.file("l"));
    FAIL() << "expected truncated_file_error";
  } catch (const truncated_file_error& e) {
    EXPECT_EQ(e.offset, 21u);
    EXPECT_NE(std::string(e.what()).find("21"), std::string::npos);
  }

  write_bytes(dir.file("short"), {0, 0, 8});
  EXPECT_THROW(data::load_idx(dir.file("short"), dir.file("l")), truncated_file_error);
  EXPECT_THROW(data::load_idx(dir.file("missing"), dir.file("l")), io_error);
}

TEST(LoadIdx, WriteReadRoundTrip) {
  TempDir dir;
  auto ds = cyclic(6);
  ds.X = (ds.X * 255.0).array().round() / 255.0;
  data::write_idx(dir.file("i"), dir.file("l"), ds, 2, 2);
  const auto back = data::load_idx(dir.file("i"), dir.file("l"));
  EXPECT_EQ(back.X, ds.X);
  EXPECT_EQ(back.y, ds.y);
}

TEST(LoadIdx, BundledSubsetHasExpectedShape) {
  const std::string dir = TCA_DATA_DIR;
  const auto ds = data::load_idx(dir + "/mnist389-images-idx3-ubyte", dir + "/mnist389-labels-idx1-ubyte");
  EXPECT_EQ(ds.dim(), 784);
  EXPECT_EQ(ds.classes, (std::vector<int>{3, 8, 9}));
  const auto train = data::subset(ds, {3, 8, 9}, 500);
  EXPECT_EQ(train.size(), 1500u);
  EXPECT_NO_THROW(train.validate());
}

TEST(Subset, FileOrderPerClass) {
  const auto ds = cyclic(30);
  const auto sub = data::subset(ds, {3, 9}, 4);
  ASSERT_EQ(sub.size(), 8u);
  EXPECT_EQ(sub.y, (std::vector<int>{3, 9, 3, 9, 3, 9, 3, 9}));
  EXPECT_EQ(sub.X(0, 0), 0.0);
  EXPECT_EQ(sub.X(1, 0), 2.0 / 30.0);
  EXPECT_EQ(sub.classes, (std::vector<int>{3, 9}));

  const auto again = data::subset(ds, {3, 9}, 4);
  EXPECT_EQ(again.X, sub.X);
  EXPECT_EQ(again.y, sub.y);

  EXPECT_EQ(data::subset(ds, {3, 8, 9}, 0).size(), 0u);
  EXPECT_THROW(data::subset(ds, {3, 8, 9}, 11), tca::invalid_argument);
  EXPECT_THROW(data::subset(ds, {3, 7}, 1), tca::invalid_argument);

  // skip then holdout: disjoint from the training rows
  const auto rest = data::holdout(ds, {3, 8, 9}, 4, 100);
  EXPECT_EQ(rest.size(), 18u);
  EXPECT_GE(rest.X.minCoeff(), 12.0 / 30.0);
}

TEST(Dither, StaysInRangeAndMovesInward) {
  Dataset ds;
  ds.X.resize(200, 50);
  ds.X.leftCols(25).setConstant(1.0);
  ds.X.rightCols(25).setZero();
  ds.y.assign(200, 0);
  ds.classes = {0};
  rng_t rng(4);
  const auto out = data::dither(ds, 0.05, rng);
  EXPECT_GE(out.X.minCoeff(), 0.0);
  EXPECT_LE(out.X.maxCoeff(), 1.0);
  EXPECT_LT(out.X.leftCols(25).maxCoeff(), 1.0);
  EXPECT_GT(out.X.rightCols(25).minCoeff(), 0.0);
  EXPECT_EQ(out.y, ds.y);
}

TEST(Dither, MeanShiftMatchesRate) {
  // mid-range pixels are never clamped at this rate, so |delta| ~ Exp(mean 0.05)
  Dataset ds;
  ds.X = Matrix::Constant(1000, 100, 0.3);
  ds.X.rightCols(50).setConstant(0.7);
  ds.y.assign(1000, 0);
  ds.classes = {0};
  rng_t rng(12);
  const auto out = data::dither(ds, 0.05, rng);
  const Matrix delta = (out.X - ds.X).cwiseAbs();
  const double mean = delta.mean();
  // sd of an exponential equals its mean
  EXPECT_NEAR(mean, 0.05, 3.0 * 0.05 / std::sqrt(static_cast<double>(delta.size())));
  EXPECT_GT(out.X.leftCols(50).minCoeff(), 0.3);
  EXPECT_LT(out.X.rightCols(50).maxCoeff(), 0.7);
  EXPECT_THROW(data::dither(ds, 0.0, rng), tca::invalid_argument);
}

TEST(Batches, CoverSizesAndSeeds) {
  const auto b = data::batches(103, 20, 7);
  ASSERT_EQ(b.size(), 6u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(b[k].size(), 20u);
  EXPECT_EQ(b.back().size(), 3u);
  std::vector<std::size_t> all;
  for (const auto& blk : b) all.insert(all.end(), blk.begin(), blk.end());
  std::sort(all.begin(), all.end());
  for (std::size_t k = 0; k < all.size(); ++k) ASSERT_EQ(all[k], k);

  EXPECT_EQ(data::batches(103, 20, 7), b);
  EXPECT_NE(data::batches(103, 20, 8), b);
  // small S: distinct seeds give distinct orders for most pairs
  std::set<std::vector<std::vector<std::size_t>>> orders;
  for (std::uint64_t s = 0; s < 20; ++s) orders.insert(data::batches(5, 5, s));
  EXPECT_GT(orders.size(), 10u);
  EXPECT_TRUE(data::batches(0, 4, 1).empty());
  EXPECT_THROW(data::batches(5, 0, 1), tca::invalid_argument);
}

TEST(Labels, OneHotAndGather) {
  const std::vector<int> labels{9, 3, 8, 9};
  const Matrix oh = data::one_hot(labels, {3, 8, 9});
  Matrix expected(4, 3);
  expected << 0, 0, 1, 1, 0, 0, 0, 1, 0, 0, 0, 1;
  EXPECT_EQ(oh, expected);
  EXPECT_THROW(data::one_hot(std::vector<int>{4}, {3, 8, 9}), tca::invalid_argument);

  const std::vector<std::size_t> rows{3, 0};
  const Matrix g = data::gather_rows(expected, rows);
  EXPECT_EQ(g.row(0), expected.row(3));
  EXPECT_EQ(g.row(1), expected.row(0));
}

TEST(Pgm, HeaderAndBytes) {
  TempDir dir;
  RowVector px(6);
  px << 0.0, 1.0, 0.5, -0.2, 1.7, 0.25;
  data::write_pgm(dir.file("a.pgm"), px, 3, 2);
  std::ifstream in(dir.file("a.pgm"), std::ios::binary);
  const std::string content{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const std::string header = "P5\n3 2\n255\n";
  ASSERT_EQ(content.size(), header.size() + 6);
  EXPECT_EQ(content.substr(0, header.size()), header);
  const auto* b = reinterpret_cast<const unsigned char*>(content.data() + header.size());
  EXPECT_EQ(std::vector<unsigned>(b, b + 6), (std::vector<unsigned>{0, 255, 128, 0, 255, 64}));
  EXPECT_THROW(data::write_pgm(dir.file("b.pgm"), px, 2, 2), shape_error);
}
