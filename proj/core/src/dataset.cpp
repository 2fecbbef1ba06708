#include "pccnmf/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "pccnmf/error.hpp"

namespace pccnmf {

namespace fs = std::filesystem;

DataMatrix::DataMatrix(Matrix values, Scale scale,
                       std::optional<PixelShape> pixel_shape,
                       Provenance provenance)
    : values_(std::move(values)),
      scale_(scale),
      pixel_shape_(pixel_shape),
      provenance_(std::move(provenance)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw FormatError("data matrix must have at least one row and one column");
  }
  const double bound = scale_ == Scale::unit ? 1.0 : 255.0;
  for (Eigen::Index j = 0; j < values_.cols(); ++j) {
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      const double v = values_(i, j);
      if (!(v >= 0.0) || v > bound) {
        std::ostringstream os;
        os << "entry at row " << i + 1 << ", column " << j + 1 << " is " << v
           << "; expected a value in [0, " << bound << "]";
        throw FormatError(os.str());
      }
    }
  }
  if (pixel_shape_ &&
      static_cast<Eigen::Index>(pixel_shape_->height) * pixel_shape_->width !=
          values_.rows()) {
    throw FormatError("pixel shape does not match the number of rows");
  }
}

DataMatrix DataMatrix::with_provenance(Provenance p) const {
  DataMatrix copy = *this;
  copy.provenance_ = std::move(p);
  return copy;
}

// ---------------------------------------------------------------------------
// Swimmer

namespace {

constexpr int kSide = 13;

using Pixel = std::pair<int, int>;  // (row, col)

// Upper-left limb; the other three are mirror images across the middle row
// and/or middle column.
constexpr std::array<std::array<Pixel, 2>, 4> kUpperLeftLimb{{
    {{{2, 5}, {1, 4}}},  // raised
    {{{3, 5}, {3, 4}}},  // horizontal
    {{{4, 5}, {5, 4}}},  // lowered
    {{{1, 5}, {0, 5}}},  // vertical
}};

}  // namespace

SwimmerParts swimmer_parts(const SwimmerSpec& spec) {
  if (spec.image_side != kSide || spec.limb_positions != 4 ||
      spec.limb_count != 4) {
    throw ConfigurationError(
        "only the 13x13 swimmer with 4 limbs in 4 positions is supported");
  }
  SwimmerParts parts;
  std::vector<int> backbone;
  for (int r = 1; r <= 11; ++r) backbone.push_back(r * kSide + 6);
  parts.pixels.push_back(backbone);

  const auto mirror = [](Pixel p, bool flip_rows, bool flip_cols) {
    return Pixel{flip_rows ? kSide - 1 - p.first : p.first,
                 flip_cols ? kSide - 1 - p.second : p.second};
  };
  constexpr std::array<std::pair<bool, bool>, 4> kLimbs{
      {{false, false}, {false, true}, {true, false}, {true, true}}};
  for (const auto& [fr, fc] : kLimbs) {
    for (const auto& segment : kUpperLeftLimb) {
      std::vector<int> px;
      for (const Pixel& p : segment) {
        const Pixel q = mirror(p, fr, fc);
        px.push_back(q.first * kSide + q.second);
      }
      parts.pixels.push_back(std::move(px));
    }
  }

  const int n = kSide * kSide;
  const int r = static_cast<int>(parts.pixels.size());
  const int m = 256;
  parts.basis = Matrix::Zero(n, r);
  for (int b = 0; b < r; ++b) {
    for (int px : parts.pixels[b]) parts.basis(px, b) = 1.0;
  }
  parts.weights = Matrix::Zero(r, m);
  for (int i = 0; i < m; ++i) {
    parts.weights(0, i) = 1.0;
    for (int limb = 0; limb < 4; ++limb) {
      const int pos = (i >> (2 * limb)) & 3;
      parts.weights(1 + 4 * limb + pos, i) = 1.0;
    }
  }
  return parts;
}

DataMatrix generate_swimmer(const SwimmerSpec& spec) {
  const SwimmerParts parts = swimmer_parts(spec);
  Matrix values = parts.basis * parts.weights;
  return DataMatrix(std::move(values), Scale::unit, PixelShape{kSide, kSide},
                    Provenance{"swimmer", std::nullopt, std::nullopt});
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

Scale infer_scale(const Matrix& v) {
  return (v.size() > 0 && v.maxCoeff() > 1.0) ? Scale::raw255 : Scale::unit;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

Matrix parse_csv_values(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    std::vector<double> row;
    std::size_t col = 0;
    while (true) {
      ++col;
      const auto comma = sv.find(',');
      const std::string_view field = trim(sv.substr(0, comma));
      double v = 0.0;
      const auto [ptr, ec] =
          std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc{} ||
          ptr != field.data() + field.size()) {
        std::ostringstream os;
        os << "row " << line_no << ", column " << col
           << ": cannot parse '" << field << "' as a number";
        throw FormatError(os.str());
      }
      if (v < 0.0) {
        std::ostringstream os;
        os << "row " << line_no << ", column " << col
           << ": negative entry " << field;
        throw FormatError(os.str());
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      sv = sv.substr(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream os;
      os << "row " << line_no << " has " << row.size()
         << " columns, expected " << rows.front().size();
      throw FormatError(os.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("CSV input is empty");

  Matrix values(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) values(i, j) = rows[i][j];
  }
  return values;
}

DataMatrix parse_csv(const std::string& text, const std::string& source) {
  Matrix values = parse_csv_values(text);
  const Scale scale = infer_scale(values);
  return DataMatrix(std::move(values), scale, std::nullopt,
                    Provenance{source, std::nullopt, std::nullopt});
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(const std::string& data, std::size_t& pos) {
  while (pos < data.size()) {
    const char c = data[pos];
    if (c == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < data.size() &&
         !std::isspace(static_cast<unsigned char>(data[pos])) &&
         data[pos] != '#') {
    ++pos;
  }
  return data.substr(start, pos - start);
}

int parse_int(const std::string& tok, const fs::path& path, const char* what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw FormatError(path.string() + ": bad PGM " + what + " '" + tok + "'");
  }
  return v;
}

}  // namespace

Matrix read_csv_values(const fs::path& path) {
  return parse_csv_values(read_file(path));
}

PgmImage read_pgm(const fs::path& path) {
  const std::string data = read_file(path);
  std::size_t pos = 0;
  const std::string magic = next_token(data, pos);
  if (magic != "P2" && magic != "P5") {
    throw FormatError(path.string() + ": not a P2/P5 PGM file");
  }
  PgmImage img;
  img.width = parse_int(next_token(data, pos), path, "width");
  img.height = parse_int(next_token(data, pos), path, "height");
  img.maxval = parse_int(next_token(data, pos), path, "maxval");
  if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 ||
      img.maxval > 65535) {
    throw FormatError(path.string() + ": invalid PGM header");
  }
  const std::size_t count =
      static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  img.pixels.reserve(count);
  if (magic == "P2") {
    for (std::size_t k = 0; k < count; ++k) {
      const std::string tok = next_token(data, pos);
      if (tok.empty()) {
        throw FormatError(path.string() + ": truncated pixel data");
      }
      img.pixels.push_back(parse_int(tok, path, "pixel"));
    }
  } else {
    ++pos;  // single whitespace after maxval
    const std::size_t bytes_per = img.maxval < 256 ? 1 : 2;
    if (data.size() < pos + count * bytes_per) {
      throw FormatError(path.string() + ": truncated pixel data");
    }
    for (std::size_t k = 0; k < count; ++k) {
      const auto* p =
          reinterpret_cast<const unsigned char*>(data.data() + pos + k * bytes_per);
      img.pixels.push_back(bytes_per == 1 ? p[0] : (p[0] << 8) | p[1]);
    }
  }
  return img;
}

void write_pgm(const fs::path& path, int width, int height,
               const std::vector<std::uint8_t>& pixels) {
  if (static_cast<std::size_t>(width) * height != pixels.size()) {
    throw ParameterError("PGM pixel count does not match dimensions");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P2\n" << width << ' ' << height << "\n255\n";
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      out << static_cast<int>(pixels[r * width + c]) << (c + 1 < width ? " " : "");
    }
    out << '\n';
  }
}

DataMatrix load_matrix(const fs::path& path, MatrixFormat format) {
  if (format == MatrixFormat::csv) {
    DataMatrix m = parse_csv(read_file(path), path.string());
    const fs::path meta_path = sidecar_path(path);
    if (!fs::exists(meta_path)) return m;
    try {
      const auto meta = nlohmann::json::parse(read_file(meta_path));
      Scale scale = m.scale();
      if (meta.contains("scale")) {
        scale = meta["scale"] == "unit" ? Scale::unit : Scale::raw255;
      }
      std::optional<PixelShape> shape;
      if (meta.contains("pixel_shape")) {
        shape = PixelShape{meta["pixel_shape"][0].get<int>(),
                           meta["pixel_shape"][1].get<int>()};
      }
      Provenance prov{meta.value("source", path.string()), std::nullopt,
                      std::nullopt};
      if (meta.contains("seed") && !meta["seed"].is_null()) {
        prov.seed = meta["seed"].get<std::uint64_t>();
      }
      if (meta.contains("xi") && !meta["xi"].is_null()) {
        prov.xi = meta["xi"].get<double>();
      }
      return DataMatrix(m.values(), scale, shape, std::move(prov));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(meta_path.string() + ": " + e.what());
    }
  }

  if (!fs::is_directory(path)) {
    throw IoError(path.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  if (files.empty()) throw FormatError(path.string() + ": no .pgm files found");

  std::optional<PixelShape> shape;
  Matrix values;
  for (std::size_t j = 0; j < files.size(); ++j) {
    const PgmImage img = read_pgm(files[j]);
    const PixelShape s{img.height, img.width};
    if (!shape) {
      shape = s;
      values.resize(static_cast<Eigen::Index>(img.pixels.size()),
                    static_cast<Eigen::Index>(files.size()));
    } else if (s != *shape) {
      std::ostringstream os;
      os << files[j].filename().string() << " is " << s.width << "x"
         << s.height << ", expected " << shape->width << "x" << shape->height;
      throw FormatError(os.str());
    }
    for (std::size_t k = 0; k < img.pixels.size(); ++k) {
      values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          img.pixels[k];
    }
  }
  const Scale scale = infer_scale(values);
  return DataMatrix(std::move(values), scale, shape,
                    Provenance{path.string(), std::nullopt, std::nullopt});
}

// ---------------------------------------------------------------------------
// Writing

std::string to_csv(const Matrix& values) {
  std::string out;
  std::array<char, 32> buf{};
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j > 0) out.push_back(',');
      const auto [ptr, ec] =
          std::to_chars(buf.data(), buf.data() + buf.size(), values(i, j));
      out.append(buf.data(), ptr);
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const fs::path& path, const Matrix& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_csv(values);
}

fs::path sidecar_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".json");
  return p;
}

void save_matrix(const fs::path& path, const DataMatrix& m) {
  write_csv(path, m.values());
  nlohmann::ordered_json meta;
  meta["rows"] = m.rows();
  meta["cols"] = m.cols();
  meta["scale"] = m.scale() == Scale::unit ? "unit" : "raw255";
  meta["source"] = m.provenance().source;
  meta["seed"] = m.provenance().seed ? nlohmann::ordered_json(*m.provenance().seed)
                                     : nlohmann::ordered_json(nullptr);
  meta["xi"] = m.provenance().xi ? nlohmann::ordered_json(*m.provenance().xi)
                                 : nlohmann::ordered_json(nullptr);
  if (m.pixel_shape()) {
    meta["pixel_shape"] = {m.pixel_shape()->height, m.pixel_shape()->width};
  }
  std::ofstream out(sidecar_path(path));
  if (!out) throw IoError("cannot write " + sidecar_path(path).string());
  out << meta.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Perturbations

DataMatrix rescale(const DataMatrix& m) {
  if (m.scale() == Scale::unit) {
    warn("rescale: matrix is already unit-scaled; returned unchanged");
    return m;
  }
  return DataMatrix(m.values() / 255.0, Scale::unit, m.pixel_shape(),
                    m.provenance());
}

DataMatrix apply_flip_noise(const DataMatrix& m, double xi, std::uint64_t seed) {
  if (!(xi >= 0.0 && xi <= 1.0)) {
    throw ParameterError("flip probability xi must lie in [0, 1]");
  }
  if (m.scale() != Scale::unit) {
    throw ParameterError("flip noise requires a unit-scaled matrix");
  }
  std::mt19937_64 gen(seed);
  Matrix out = m.values();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
      if (u < xi) out(i, j) = 1.0 - out(i, j);
    }
  }
  Provenance p = m.provenance();
  p.seed = seed;
  p.xi = xi;
  return DataMatrix(std::move(out), Scale::unit, m.pixel_shape(), std::move(p));
}

DataMatrix binarize(const DataMatrix& m) {
  if (m.scale() != Scale::unit) {
    throw ParameterError("binarize requires a unit-scaled matrix");
  }
  Matrix out = (m.values().array() >= 0.5).cast<double>();
  return DataMatrix(std::move(out), Scale::unit, m.pixel_shape(),
                    m.provenance());
}

std::uint64_t content_digest(const Matrix& values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](std::uint64_t word) {
    for (int k = 0; k < 8; ++k) {
      h ^= (word >> (8 * k)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<std::uint64_t>(values.rows()));
  mix(static_cast<std::uint64_t>(values.cols()));
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      std::uint64_t bits = 0;
      const double v = values(i, j);
      std::memcpy(&bits, &v, sizeof bits);
      mix(bits);
    }
  }
  return h;
}

}  // namespace pccnmf
