#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace qdeq {

enum class DatasetName { MNIST4, MNIST10, FashionMNIST10, CIFAR10 };

std::string to_string(DatasetName d);
DatasetName dataset_name_from_string(const std::string& name);
int num_classes(DatasetName d);

/// Grayscale images in [0,1], one row-major-flattened image per column of `pixels`.
struct ImageDataset {
  DatasetName name = DatasetName::MNIST10;
  int rows = 0;
  int cols = 0;
  int num_classes = 10;
  Eigen::MatrixXd pixels;  // (rows*cols) × size()
  std::vector<int> labels;

  int size() const { return static_cast<int>(labels.size()); }
  Eigen::MatrixXd image(int i) const;  // rows × cols
};

using ImageMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Big-endian IDX pair (image magic 0x00000803, label magic 0x00000801); bytes scaled by 1/255.
ImageDataset load_idx(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path);

/// CIFAR-10 binary batch: 3073-byte records, converted to luma 0.299R + 0.587G + 0.114B.
ImageDataset load_cifar_binary(const std::filesystem::path& path);

/// Mean over non-overlapping windows; the side must divide the image.
Eigen::MatrixXd avg_pool(const Eigen::MatrixXd& image, int out_side);

/// Corner-aligned bilinear resampling.
Eigen::MatrixXd resize_bilinear(const Eigen::MatrixXd& image, int out_rows, int out_cols);

ImageDataset avg_pool(const ImageDataset& ds, int out_side);
ImageDataset resize_bilinear(const ImageDataset& ds, int out_rows, int out_cols);

/// Order-preserving filter; kept labels are remapped to their rank in `keep`.
ImageDataset filter_classes(const ImageDataset& ds, std::vector<int> keep);

ImageDataset subset(const ImageDataset& ds, const std::vector<int>& indices);

/// Seeded uniform shuffle then prefix split at round(train_frac · N).
std::pair<ImageDataset, ImageDataset> split(const ImageDataset& ds, double train_frac,
                                            std::uint64_t seed);

/// Fully preprocessed train or test set for a named task, read from
/// <root>/mnist, <root>/fashion-mnist or <root>/cifar-10-batches-bin.
ImageDataset load_task(DatasetName name, const std::filesystem::path& root, bool train);

/// CLI value, then QDEQ_DATA_DIR, else empty.
std::filesystem::path resolve_data_dir(const std::string& flag_value);

}  // namespace qdeq
