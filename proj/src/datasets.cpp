#include "qdeq/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "qdeq/errors.hpp"
#include "qdeq/rng.hpp"

namespace qdeq {

namespace fs = std::filesystem;

std::string to_string(DatasetName d) {
  switch (d) {
    case DatasetName::MNIST4: return "mnist4";
    case DatasetName::MNIST10: return "mnist10";
    case DatasetName::FashionMNIST10: return "fashion10";
    case DatasetName::CIFAR10: return "cifar10";
  }
  return "?";
}

DatasetName dataset_name_from_string(const std::string& name) {
  for (DatasetName d : {DatasetName::MNIST4, DatasetName::MNIST10, DatasetName::FashionMNIST10,
                        DatasetName::CIFAR10}) {
    if (to_string(d) == name) return d;
  }
  throw InvalidArgument("unknown dataset '" + name + "' (expected mnist4, mnist10, fashion10, cifar10)");
}

int num_classes(DatasetName d) { return d == DatasetName::MNIST4 ? 4 : 10; }

Eigen::MatrixXd ImageDataset::image(int i) const {
  return Eigen::Map<const ImageMatrix>(pixels.col(i).data(), rows, cols);
}

namespace {

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset,
                        const fs::path& path) {
  if (buf.size() < offset + 4) throw LengthError(path.string() + ": truncated header");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

std::string hex32(std::uint32_t v) {
  char s[16];
  std::snprintf(s, sizeof s, "0x%08X", v);
  return s;
}

void expect_magic(std::uint32_t observed, std::uint32_t expected, const fs::path& path) {
  if (observed != expected) {
    throw FormatError(path.string() + ": bad IDX magic " + hex32(observed) + ", expected " +
                      hex32(expected));
  }
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& image) {
  ImageMatrix rm = image;
  return Eigen::Map<const Eigen::VectorXd>(rm.data(), rm.size());
}

template <typename F>
ImageDataset map_images(const ImageDataset& ds, int rows, int cols, F&& f) {
  ImageDataset out = ds;
  out.rows = rows;
  out.cols = cols;
  out.pixels.resize(static_cast<Eigen::Index>(rows) * cols, ds.size());
  for (int i = 0; i < ds.size(); ++i) out.pixels.col(i) = flatten(f(ds.image(i)));
  return out;
}

}  // namespace

ImageDataset load_idx(const fs::path& images_path, const fs::path& labels_path) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  expect_magic(read_be32(img, 0, images_path), 0x00000803u, images_path);
  expect_magic(read_be32(lab, 0, labels_path), 0x00000801u, labels_path);
  const std::uint32_t n = read_be32(img, 4, images_path);
  const std::uint32_t rows = read_be32(img, 8, images_path);
  const std::uint32_t cols = read_be32(img, 12, images_path);
  const std::uint32_t nl = read_be32(lab, 4, labels_path);
  if (n != nl) {
    throw LengthError("IDX image count " + std::to_string(n) + " != label count " + std::to_string(nl));
  }
  const std::size_t pix = std::size_t{rows} * cols;
  if (img.size() < 16 + std::size_t{n} * pix) throw LengthError(images_path.string() + ": truncated pixel data");
  if (lab.size() < 8 + std::size_t{n}) throw LengthError(labels_path.string() + ": truncated label data");

  ImageDataset ds;
  ds.rows = static_cast<int>(rows);
  ds.cols = static_cast<int>(cols);
  ds.pixels.resize(static_cast<Eigen::Index>(pix), n);
  ds.labels.resize(n);
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    const unsigned char* p = img.data() + 16 + std::size_t{i} * pix;
    for (std::size_t k = 0; k < pix; ++k) ds.pixels(static_cast<Eigen::Index>(k), i) = p[k] / 255.0;
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = std::max(10, max_label + 1);
  return ds;
}

ImageDataset load_cifar_binary(const fs::path& path) {
  constexpr std::size_t kRecord = 3073;
  constexpr int kSide = 32;
  constexpr std::size_t kPlane = kSide * kSide;
  const auto buf = read_file(path);
  if (buf.size() % kRecord != 0) {
    throw LengthError(path.string() + ": size " + std::to_string(buf.size()) +
                      " is not a multiple of 3073");
  }
  const std::size_t n = buf.size() / kRecord;
  ImageDataset ds;
  ds.name = DatasetName::CIFAR10;
  ds.rows = kSide;
  ds.cols = kSide;
  ds.pixels.resize(kPlane, static_cast<Eigen::Index>(n));
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* rec = buf.data() + i * kRecord;
    if (rec[0] > 9) throw FormatError(path.string() + ": label " + std::to_string(rec[0]) + " out of range");
    ds.labels[i] = rec[0];
    const unsigned char* r = rec + 1;
    for (std::size_t k = 0; k < kPlane; ++k) {
      const double y = 0.299 * r[k] + 0.587 * r[kPlane + k] + 0.114 * r[2 * kPlane + k];
      ds.pixels(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = y / 255.0;
    }
  }
  return ds;
}

Eigen::MatrixXd avg_pool(const Eigen::MatrixXd& image, int out_side) {
  if (out_side < 1 || image.rows() % out_side != 0 || image.cols() % out_side != 0) {
    throw InvalidArgument("avg_pool: " + std::to_string(image.rows()) + "x" +
                          std::to_string(image.cols()) + " not divisible into " +
                          std::to_string(out_side) + "x" + std::to_string(out_side) + " windows");
  }
  const Eigen::Index wr = image.rows() / out_side;
  const Eigen::Index wc = image.cols() / out_side;
  Eigen::MatrixXd out(out_side, out_side);
  for (int i = 0; i < out_side; ++i) {
    for (int j = 0; j < out_side; ++j) out(i, j) = image.block(i * wr, j * wc, wr, wc).mean();
  }
  return out;
}

Eigen::MatrixXd resize_bilinear(const Eigen::MatrixXd& image, int out_rows, int out_cols) {
  if (out_rows < 1 || out_cols < 1 || image.size() == 0) throw InvalidArgument("resize_bilinear: empty shape");
  const auto coord = [](int i, int out_n, Eigen::Index in_n) {
    return out_n == 1 ? 0.0 : static_cast<double>(i) * static_cast<double>(in_n - 1) / (out_n - 1);
  };
  Eigen::MatrixXd out(out_rows, out_cols);
  for (int i = 0; i < out_rows; ++i) {
    const double y = coord(i, out_rows, image.rows());
    const Eigen::Index y0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(y), image.rows() - 1);
    const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, image.rows() - 1);
    const double fy = y - static_cast<double>(y0);
    for (int j = 0; j < out_cols; ++j) {
      const double x = coord(j, out_cols, image.cols());
      const Eigen::Index x0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(x), image.cols() - 1);
      const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, image.cols() - 1);
      const double fx = x - static_cast<double>(x0);
      const double top = (1 - fx) * image(y0, x0) + fx * image(y0, x1);
      const double bottom = (1 - fx) * image(y1, x0) + fx * image(y1, x1);
      out(i, j) = std::clamp((1 - fy) * top + fy * bottom, 0.0, 1.0);
    }
  }
  return out;
}

ImageDataset avg_pool(const ImageDataset& ds, int out_side) {
  return map_images(ds, out_side, out_side, [&](const Eigen::MatrixXd& im) { return avg_pool(im, out_side); });
}

ImageDataset resize_bilinear(const ImageDataset& ds, int out_rows, int out_cols) {
  return map_images(ds, out_rows, out_cols,
                    [&](const Eigen::MatrixXd& im) { return resize_bilinear(im, out_rows, out_cols); });
}

ImageDataset filter_classes(const ImageDataset& ds, std::vector<int> keep) {
  if (keep.empty()) throw InvalidArgument("filter_classes: keep set is empty");
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  std::vector<int> indices;
  for (int i = 0; i < ds.size(); ++i) {
    if (std::binary_search(keep.begin(), keep.end(), ds.labels[i])) indices.push_back(i);
  }
  ImageDataset out = subset(ds, indices);
  for (int& l : out.labels) l = static_cast<int>(std::lower_bound(keep.begin(), keep.end(), l) - keep.begin());
  out.num_classes = static_cast<int>(keep.size());
  return out;
}

ImageDataset subset(const ImageDataset& ds, const std::vector<int>& indices) {
  ImageDataset out;
  out.name = ds.name;
  out.rows = ds.rows;
  out.cols = ds.cols;
  out.num_classes = ds.num_classes;
  out.pixels.resize(ds.pixels.rows(), static_cast<Eigen::Index>(indices.size()));
  out.labels.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const int i = indices[k];
    if (i < 0 || i >= ds.size()) throw InvalidArgument("subset: index " + std::to_string(i) + " out of range");
    out.pixels.col(static_cast<Eigen::Index>(k)) = ds.pixels.col(i);
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

std::pair<ImageDataset, ImageDataset> split(const ImageDataset& ds, double train_frac,
                                            std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw InvalidArgument("split: train_frac must be in (0,1)");
  std::vector<int> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  // Fisher-Yates with an explicit draw so the permutation is the same on every standard library.
  for (int i = ds.size() - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[i], idx[j]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * ds.size()));
  std::vector<int> a(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<int> b(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return {subset(ds, a), subset(ds, b)};
}

ImageDataset load_task(DatasetName name, const fs::path& root, bool train) {
  if (root.empty()) throw InvalidArgument("no data directory: pass --data-dir or set QDEQ_DATA_DIR");
  const std::string prefix = train ? "train" : "t10k";
  ImageDataset ds;
  switch (name) {
    case DatasetName::MNIST4:
    case DatasetName::MNIST10:
    case DatasetName::FashionMNIST10: {
      const fs::path dir = root / (name == DatasetName::FashionMNIST10 ? "fashion-mnist" : "mnist");
      ds = load_idx(dir / (prefix + "-images-idx3-ubyte"), dir / (prefix + "-labels-idx1-ubyte"));
      break;
    }
    case DatasetName::CIFAR10: {
      const fs::path dir = root / "cifar-10-batches-bin";
      std::vector<ImageDataset> parts;
      if (train) {
        for (int b = 1; b <= 5; ++b) parts.push_back(load_cifar_binary(dir / ("data_batch_" + std::to_string(b) + ".bin")));
      } else {
        parts.push_back(load_cifar_binary(dir / "test_batch.bin"));
      }
      ds = parts.front();
      Eigen::Index total = 0;
      for (const auto& p : parts) total += p.size();
      ds.pixels.resize(ds.pixels.rows(), total);
      ds.labels.clear();
      Eigen::Index at = 0;
      for (const auto& p : parts) {
        ds.pixels.middleCols(at, p.size()) = p.pixels;
        ds.labels.insert(ds.labels.end(), p.labels.begin(), p.labels.end());
        at += p.size();
      }
      break;
    }
  }
  ds.name = name;
  if (name == DatasetName::MNIST4) {
    ds = avg_pool(filter_classes(ds, {0, 3, 6, 9}), 4);
  } else {
    ds = resize_bilinear(ds, 10, 10);
    ds.num_classes = 10;
  }
  ds.name = name;
  return ds;
}

fs::path resolve_data_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("QDEQ_DATA_DIR"); env && *env) return env;
  return {};
}

}  // namespace qdeq
