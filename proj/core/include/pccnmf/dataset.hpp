#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pccnmf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Scale { raw255, unit };

struct PixelShape {
  int height = 0;
  int width = 0;

  friend bool operator==(const PixelShape&, const PixelShape&) = default;
};

/// Provenance carried alongside a matrix and written to the JSON sidecar.
struct Provenance {
  std::string source;
  std::optional<std::uint64_t> seed;
  std::optional<double> xi;
};

/// Nonnegative N x M data matrix: one row per pixel, one column per image.
///
/// The constructor validates every invariant (nonnegativity, the bound
/// implied by the scale, pixel shape consistent with N), so a DataMatrix that
/// exists is always well formed. Values are immutable after construction.
class DataMatrix {
 public:
  DataMatrix(Matrix values, Scale scale,
             std::optional<PixelShape> pixel_shape = std::nullopt,
             Provenance provenance = {});

  const Matrix& values() const noexcept { return values_; }
  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }
  Scale scale() const noexcept { return scale_; }
  const std::optional<PixelShape>& pixel_shape() const noexcept {
    return pixel_shape_;
  }
  const Provenance& provenance() const noexcept { return provenance_; }

  DataMatrix with_provenance(Provenance p) const;

 private:
  Matrix values_;
  Scale scale_;
  std::optional<PixelShape> pixel_shape_;
  Provenance provenance_;
};

struct SwimmerSpec {
  int image_side = 13;
  int limb_positions = 4;
  int limb_count = 4;
};

/// The 17 parts of the Swimmer: part 0 is the backbone, part 1 + 4*limb + pos
/// is limb `limb` in position `pos`. Pixel indices are row-major.
struct SwimmerParts {
  std::vector<std::vector<int>> pixels;
  Matrix basis;    // 169 x 17, 0/1
  Matrix weights;  // 17 x 256, 0/1
};

SwimmerParts swimmer_parts(const SwimmerSpec& spec = {});

/// 169 x 256 binary Swimmer matrix. Image i has limb l in position
/// (i >> 2l) & 3. Deterministic.
DataMatrix generate_swimmer(const SwimmerSpec& spec = {});

enum class MatrixFormat { csv, pgm_dir };

/// A CSV with a JSON sidecar next to it takes scale, pixel shape and
/// provenance from the sidecar.
DataMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);

/// Parses CSV text (one row per pixel, no header).
DataMatrix parse_csv(const std::string& text, const std::string& source = "");

/// Nonnegative CSV values without the [0, 255] bound of a DataMatrix; used
/// for factor matrices.
Matrix parse_csv_values(const std::string& text);
Matrix read_csv_values(const std::filesystem::path& path);

/// Parses a single PGM (P2 or P5). Returns the pixels row-major.
struct PgmImage {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::vector<double> pixels;
};
PgmImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, int width, int height,
               const std::vector<std::uint8_t>& pixels);

/// Shortest round-trip CSV; `parse_csv(to_csv(m))` reproduces m exactly.
std::string to_csv(const Matrix& values);
void write_csv(const std::filesystem::path& path, const Matrix& values);

/// Writes `path` as CSV plus the sidecar `path` with extension .json.
void save_matrix(const std::filesystem::path& path, const DataMatrix& m);
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

/// Divides by 255. A unit-scaled input is returned unchanged with a warning.
DataMatrix rescale(const DataMatrix& m);

/// Flips each entry P -> 1 - P independently with probability xi. Draws come
/// from mt19937_64(seed), one per entry in row-major order; an entry flips
/// when (draw >> 11) * 2^-53 < xi.
DataMatrix apply_flip_noise(const DataMatrix& m, double xi, std::uint64_t seed);

/// Entry -> 1 if >= 0.5, else 0.
DataMatrix binarize(const DataMatrix& m);

/// FNV-1a over shape and the bit patterns of the entries.
std::uint64_t content_digest(const Matrix& values);

}  // namespace pccnmf
