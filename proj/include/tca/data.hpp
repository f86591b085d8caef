#pragma once

// MNIST-style datasets: IDX ingestion, class subsets, dithering, batching
// and PGM dumps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tca/error.hpp"
#include "tca/tca.hpp"

namespace tca::data {

struct Dataset {
  Matrix X;                  // S x D, one sample per row, values in [0,1]
  std::vector<int> y;        // S labels
  std::vector<int> classes;  // ordered label list

  std::size_t size() const { return y.size(); }
  Eigen::Index dim() const { return X.cols(); }

  void validate() const {
    if (static_cast<std::size_t>(X.rows()) != y.size()) throw shape_error("Dataset: label count != sample count");
    if (X.size() > 0 && (X.minCoeff() < 0.0 || X.maxCoeff() > 1.0))
      throw invalid_argument("Dataset: pixel outside [0,1]");
    for (int label : y)
      if (std::find(classes.begin(), classes.end(), label) == classes.end())
        throw invalid_argument("Dataset: label " + std::to_string(label) + " not in class list");
  }
};

inline constexpr std::uint32_t idx_images_magic = 0x00000803;
inline constexpr std::uint32_t idx_labels_magic = 0x00000801;

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t be32(const std::vector<unsigned char>& buf, std::size_t off, const std::string& path) {
  if (buf.size() < off + 4) throw truncated_file_error(path, buf.size());
  return (std::uint32_t{buf[off]} << 24) | (std::uint32_t{buf[off + 1]} << 16) |
         (std::uint32_t{buf[off + 2]} << 8) | std::uint32_t{buf[off + 3]};
}

inline void put_be32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                              static_cast<char>(v)};
  out.write(b.data(), 4);
}

}  // namespace detail

// Reads an IDX image file (magic 2051) and label file (magic 2049). Pixels
// are scaled by 1/255. Classes are the sorted distinct labels.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = detail::read_file(images_path);
  const auto lab = detail::read_file(labels_path);

  if (detail::be32(img, 0, images_path) != idx_images_magic)
    throw bad_magic_error(images_path + ": bad IDX image magic");
  if (detail::be32(lab, 0, labels_path) != idx_labels_magic)
    throw bad_magic_error(labels_path + ": bad IDX label magic");

  const std::size_t n_img = detail::be32(img, 4, images_path);
  const std::size_t rows = detail::be32(img, 8, images_path);
  const std::size_t cols = detail::be32(img, 12, images_path);
  const std::size_t n_lab = detail::be32(lab, 4, labels_path);
  if (n_img != n_lab)
    throw count_mismatch_error("IDX count mismatch: " + std::to_string(n_img) + " images vs " +
                               std::to_string(n_lab) + " labels");

  const std::size_t dim = rows * cols;
  if (img.size() < 16 + n_img * dim) throw truncated_file_error(images_path, img.size());
  if (lab.size() < 8 + n_lab) throw truncated_file_error(labels_path, lab.size());

  Dataset ds;
  ds.X.resize(static_cast<Eigen::Index>(n_img), static_cast<Eigen::Index>(dim));
  ds.y.resize(n_img);
  for (std::size_t s = 0; s < n_img; ++s) {
    for (std::size_t d = 0; d < dim; ++d)
      ds.X(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(d)) = img[16 + s * dim + d] / 255.0;
    ds.y[s] = lab[8 + s];
  }
  ds.classes = ds.y;
  std::sort(ds.classes.begin(), ds.classes.end());
  ds.classes.erase(std::unique(ds.classes.begin(), ds.classes.end()), ds.classes.end());
  return ds;
}

// Writes X (rounded to 8-bit) and y as an IDX pair with the given image shape.
inline void write_idx(const std::string& images_path, const std::string& labels_path, const Dataset& ds,
                      std::uint32_t rows, std::uint32_t cols) {
  if (static_cast<std::size_t>(rows) * cols != static_cast<std::size_t>(ds.dim()))
    throw shape_error("write_idx: rows*cols != sample dimension");
  std::ofstream img(images_path, std::ios::binary), lab(labels_path, std::ios::binary);
  if (!img || !lab) throw io_error("cannot write IDX files");
  detail::put_be32(img, idx_images_magic);
  detail::put_be32(img, static_cast<std::uint32_t>(ds.size()));
  detail::put_be32(img, rows);
  detail::put_be32(img, cols);
  detail::put_be32(lab, idx_labels_magic);
  detail::put_be32(lab, static_cast<std::uint32_t>(ds.size()));
  for (Eigen::Index s = 0; s < ds.X.rows(); ++s) {
    for (Eigen::Index d = 0; d < ds.X.cols(); ++d)
      img.put(static_cast<char>(std::lround(std::clamp(ds.X(s, d), 0.0, 1.0) * 255.0)));
    lab.put(static_cast<char>(ds.y[static_cast<std::size_t>(s)]));
  }
}

inline Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& rows, std::vector<int> classes) {
  Dataset out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), ds.X.cols());
  out.y.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.X.row(static_cast<Eigen::Index>(k)) = ds.X.row(static_cast<Eigen::Index>(rows[k]));
    out.y.push_back(ds.y[rows[k]]);
  }
  out.classes = std::move(classes);
  return out;
}

// For each class, skips its first `skip` samples and keeps the next
// `per_class` in file order; the result keeps file order. Throws if a
// class has fewer samples than requested.
inline Dataset subset(const Dataset& ds, const std::vector<int>& classes, std::size_t per_class,
                      std::size_t skip = 0) {
  std::vector<std::size_t> seen(classes.size(), 0), rows;
  for (std::size_t s = 0; s < ds.size(); ++s) {
    const auto it = std::find(classes.begin(), classes.end(), ds.y[s]);
    if (it == classes.end()) continue;
    auto& count = seen[static_cast<std::size_t>(it - classes.begin())];
    if (count >= skip && count < skip + per_class) rows.push_back(s);
    ++count;
  }
  for (std::size_t c = 0; c < classes.size(); ++c)
    if (seen[c] < skip + per_class)
      throw invalid_argument("subset: class " + std::to_string(classes[c]) + " has " + std::to_string(seen[c]) +
                             " samples, need " + std::to_string(skip + per_class));
  return select_rows(ds, rows, classes);
}

// Like subset, but takes whatever is available after `skip`, up to max_per_class.
inline Dataset holdout(const Dataset& ds, const std::vector<int>& classes, std::size_t skip,
                       std::size_t max_per_class) {
  std::vector<std::size_t> seen(classes.size(), 0), rows;
  for (std::size_t s = 0; s < ds.size(); ++s) {
    const auto it = std::find(classes.begin(), classes.end(), ds.y[s]);
    if (it == classes.end()) continue;
    auto& count = seen[static_cast<std::size_t>(it - classes.begin())];
    if (count >= skip && count < skip + max_per_class) rows.push_back(s);
    ++count;
  }
  return select_rows(ds, rows, classes);
}

// Moves every pixel away from the nearer end of [0,1] by an exponential
// amount with the given mean: v > 0.5 -> v - e, otherwise v + e. Clamped.
template <class URBG>
Dataset dither(const Dataset& ds, double rate_mean, URBG& rng) {
  if (!(rate_mean > 0.0)) throw invalid_argument("dither: mean must be positive");
  std::exponential_distribution<double> expo(1.0 / rate_mean);
  Dataset out = ds;
  for (Eigen::Index s = 0; s < out.X.rows(); ++s) {
    for (Eigen::Index d = 0; d < out.X.cols(); ++d) {
      double& v = out.X(s, d);
      const double e = expo(rng);
      v = std::clamp(v > 0.5 ? v - e : v + e, 0.0, 1.0);
    }
  }
  return out;
}

// Seeded shuffle of 0..n-1 cut into blocks of `size`; the last block may be short.
inline std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t size, std::uint64_t seed) {
  if (size == 0) throw invalid_argument("batches: size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng_t rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += size)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + size)));
  return out;
}

inline Matrix gather_rows(const Matrix& X, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t k = 0; k < rows.size(); ++k)
    out.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

inline std::size_t class_index(const std::vector<int>& classes, int label) {
  const auto it = std::find(classes.begin(), classes.end(), label);
  if (it == classes.end()) throw invalid_argument("label " + std::to_string(label) + " not in class list");
  return static_cast<std::size_t>(it - classes.begin());
}

// S x C one-hot rows for the given labels.
inline Matrix one_hot(std::span<const int> labels, const std::vector<int>& classes) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(classes.size()));
  for (std::size_t s = 0; s < labels.size(); ++s)
    out(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(class_index(classes, labels[s]))) = 1.0;
  return out;
}

// Binary PGM (P5, maxval 255) of one sample.
inline void write_pgm(const std::string& path, const RowVector& pixels, int width, int height) {
  if (pixels.size() != static_cast<Eigen::Index>(width) * height) throw shape_error("write_pgm: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write '" + path + "'");
  out << "P5\n" << width << ' ' << height << "\n255\n";
  for (Eigen::Index k = 0; k < pixels.size(); ++k)
    out.put(static_cast<char>(std::lround(std::clamp(pixels(k), 0.0, 1.0) * 255.0)));
}

}  // namespace tca::data
