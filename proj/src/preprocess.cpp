#include "simlr/preprocess.hpp"

#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "simlr/error.hpp"

namespace simlr {

namespace {

void check_finite(const Eigen::MatrixXd& x) {
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (!std::isfinite(x(i, j)))
        throw MissingValueError(static_cast<std::size_t>(i + 1), static_cast<std::size_t>(j + 1));
}

void check_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second)
      throw Error(ErrorCode::Parse, std::string("duplicate ") + what + " id '" + id + "'");
}

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, delim)) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RawMatrix::validate() const {
  if (values.rows() == 0 || values.cols() == 0)
    throw Error(ErrorCode::EmptyMatrix, "matrix has no rows or no columns");
  if (static_cast<Eigen::Index>(row_ids.size()) != values.rows())
    throw Error(ErrorCode::ShapeMismatch, "row id count differs from row count");
  if (static_cast<Eigen::Index>(col_ids.size()) != values.cols())
    throw Error(ErrorCode::ShapeMismatch, "column id count differs from column count");
  check_unique(row_ids, "row");
  check_unique(col_ids, "column");
  check_finite(values);
}

RawMatrix RawMatrix::from_values(Eigen::MatrixXd values) {
  RawMatrix m;
  m.row_ids.reserve(values.rows());
  m.col_ids.reserve(values.cols());
  for (Eigen::Index i = 0; i < values.rows(); ++i) m.row_ids.push_back("r" + std::to_string(i + 1));
  for (Eigen::Index j = 0; j < values.cols(); ++j) m.col_ids.push_back("c" + std::to_string(j + 1));
  m.values = std::move(values);
  return m;
}

ColumnScaling ColumnScaling::fit(const Eigen::MatrixXd& x) {
  if (x.rows() < 2 || x.cols() < 1)
    throw Error(ErrorCode::EmptyMatrix, "standardization needs at least 2 rows and 1 column");
  check_finite(x);
  ColumnScaling s;
  const double n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean();
  s.sd.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double ss = (x.col(j).array() - s.mean(j)).square().sum();
    s.sd(j) = std::sqrt(ss / (n - 1.0));
  }
  s.divisor = n * static_cast<double>(x.cols());
  return s;
}

Eigen::MatrixXd ColumnScaling::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size())
    throw Error(ErrorCode::ShapeMismatch, "column count differs from fitted scaling");
  check_finite(x);
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    // A column whose spread is float noise relative to its level is constant.
    if (sd(j) <= 1e-12 * std::max(1.0, std::abs(mean(j)))) {
      out.col(j).setZero();
    } else {
      out.col(j) = (x.col(j).array() - mean(j)) / (sd(j) * divisor);
    }
  }
  return out;
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& x) {
  if (x.size() == 0) throw Error(ErrorCode::EmptyMatrix, "matrix is empty");
  return ColumnScaling::fit(x).apply(x);
}

Eigen::MatrixXd standardize(const RawMatrix& raw) { return standardize(raw.values); }

AlignResult align_views(const std::vector<RawMatrix>& views) {
  AlignResult result;
  if (views.empty()) return result;

  std::vector<std::unordered_map<std::string, Eigen::Index>> index(views.size());
  for (std::size_t v = 0; v < views.size(); ++v)
    for (std::size_t i = 0; i < views[v].row_ids.size(); ++i)
      index[v].emplace(views[v].row_ids[i], static_cast<Eigen::Index>(i));

  std::vector<std::string> common;
  for (const auto& id : views.front().row_ids) {
    bool everywhere = true;
    for (std::size_t v = 1; v < views.size() && everywhere; ++v) everywhere = index[v].count(id) > 0;
    if (everywhere) common.push_back(id);
  }
  if (common.empty()) throw Error(ErrorCode::EmptyIntersection, "views share no sample ids");

  std::unordered_set<std::string> kept(common.begin(), common.end());
  std::unordered_set<std::string> dropped_seen;
  for (const auto& view : views)
    for (const auto& id : view.row_ids)
      if (!kept.count(id) && dropped_seen.insert(id).second) result.dropped.push_back(id);

  for (std::size_t v = 0; v < views.size(); ++v) {
    RawMatrix out;
    out.col_ids = views[v].col_ids;
    out.row_ids = common;
    out.values.resize(static_cast<Eigen::Index>(common.size()), views[v].cols());
    for (std::size_t i = 0; i < common.size(); ++i)
      out.values.row(static_cast<Eigen::Index>(i)) = views[v].values.row(index[v].at(common[i]));
    result.views.push_back(std::move(out));
  }
  return result;
}

RawMatrix parse_matrix(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  while (std::getline(in, header) && trim(header).empty()) {
  }
  if (trim(header).empty()) throw Error(ErrorCode::EmptyMatrix, "no header line");
  const char delim = header.find('\t') != std::string::npos ? '\t' : ',';

  RawMatrix m;
  const auto head = split_line(header, delim);
  if (head.size() < 2) throw Error(ErrorCode::EmptyMatrix, "header has no column ids");
  for (std::size_t j = 1; j < head.size(); ++j) m.col_ids.push_back(trim(head[j]));
  const std::size_t p = m.col_ids.size();

  std::vector<double> cells;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto parts = split_line(line, delim);
    if (parts.size() != p + 1)
      throw Error(ErrorCode::Parse, "row " + std::to_string(row) + " has " +
                                        std::to_string(parts.size() - 1) + " values, expected " +
                                        std::to_string(p));
    m.row_ids.push_back(trim(parts[0]));
    for (std::size_t j = 0; j < p; ++j) {
      const std::string cell = trim(parts[j + 1]);
      if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") throw MissingValueError(row, j + 1);
      char* end = nullptr;
      const double value = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0')
        throw Error(ErrorCode::Parse, "cannot parse '" + cell + "' at (" + std::to_string(row) + "," +
                                          std::to_string(j + 1) + ")");
      if (!std::isfinite(value)) throw MissingValueError(row, j + 1);
      cells.push_back(value);
    }
  }
  if (row == 0) throw Error(ErrorCode::EmptyMatrix, "matrix has no data rows");

  m.values.resize(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < row; ++i)
    for (std::size_t j = 0; j < p; ++j)
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cells[i * p + j];
  m.validate();
  return m;
}

RawMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_matrix(buf.str());
}

std::string format_real(double value) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string format_matrix(const RawMatrix& m, char delimiter) {
  std::string out = "id";
  for (const auto& c : m.col_ids) {
    out += delimiter;
    out += c;
  }
  out += '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += m.row_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out += delimiter;
      out += format_real(m.values(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_matrix(const std::filesystem::path& path, const RawMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << format_matrix(m);
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                  const std::string& row_prefix, const std::string& col_prefix) {
  RawMatrix raw;
  raw.values = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) raw.row_ids.push_back(row_prefix + std::to_string(i + 1));
  for (Eigen::Index j = 0; j < m.cols(); ++j) raw.col_ids.push_back(col_prefix + std::to_string(j + 1));
  write_matrix(path, raw);
}

}  // namespace simlr
