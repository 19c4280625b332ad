// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#include "umfc/io.hpp"

#include <unistd.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace umfc::io {
namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const T le = to_little(v);
    char buf[sizeof(T)];
    std::memcpy(buf, &le, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void bytes(std::string_view s) { out_.append(s); }
  void u8(bool b) { put<std::uint8_t>(b ? 1 : 0); }
  void doubles(std::span<const double> v) {
    put<std::uint64_t>(v.size());
    for (double x : v) put(x);
  }
  void counts(const std::vector<std::uint64_t>& v) {
    put<std::uint64_t>(v.size());
    for (auto x : v) put(x);
  }
  void matrix(const Matrix& m) {
    put<std::uint64_t>(m.rows());
    put<std::uint64_t>(m.cols());
    for (double x : m.values()) put(x);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(v);
  }
  bool u8() {
    const auto v = get<std::uint8_t>();
    if (v > 1) throw Error(ErrorCode::MalformedFile, "boolean field holds " + std::to_string(v));
    return v == 1;
  }
  double finite() {
    const double v = get<double>();
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinitePayload, "snapshot holds a NaN or Inf value");
    return v;
  }
  Vector doubles() {
    const auto n = length(8);
    Vector v(n);
    for (auto& x : v) x = finite();
    return v;
  }
  std::vector<std::uint64_t> counts() {
    const auto n = length(8);
    std::vector<std::uint64_t> v(n);
    for (auto& x : v) x = get<std::uint64_t>();
    return v;
  }
  Matrix matrix() {
    const auto rows = get<std::uint64_t>();
    const auto cols = get<std::uint64_t>();
    if (cols != 0 && rows > remaining() / 8 / cols)
      throw Error(ErrorCode::TruncatedPayload, "matrix extends past the end of the snapshot");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows * cols; ++i) m.data()[i] = finite();
    return m;
  }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

 private:
  std::uint64_t length(std::size_t elem) {
    const auto n = get<std::uint64_t>();
    if (n > remaining() / elem) throw Error(ErrorCode::TruncatedPayload, "array extends past the end of the snapshot");
    return n;
  }
  void need(std::size_t n) const {
    if (remaining() < n) throw Error(ErrorCode::TruncatedPayload, "unexpected end of data");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

void put_header(Writer& w, const Header& h) {
  w.bytes(std::string_view(kMagic, 4));
  w.put<std::uint32_t>(h.version);
  w.put<std::uint32_t>(h.count);
  w.put<std::uint32_t>(h.dim);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(h.kind));
}

Header get_header(Reader& r, std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error(ErrorCode::BadMagic, "file does not start with \"UMFC\"");
  if (bytes.size() < kHeaderBytes) throw Error(ErrorCode::TruncatedPayload, "header is shorter than 20 bytes");
  for (int i = 0; i < 4; ++i) r.get<char>();
  Header h;
  h.version = r.get<std::uint32_t>();
  if (h.version != kFormatVersion)
    throw Error(ErrorCode::UnsupportedVersion, "format version " + std::to_string(h.version) + " is not supported");
  h.count = r.get<std::uint32_t>();
  h.dim = r.get<std::uint32_t>();
  const auto kind = r.get<std::uint32_t>();
  if (kind > 2) throw Error(ErrorCode::WrongPayloadKind, "unknown payload kind " + std::to_string(kind));
  h.kind = static_cast<PayloadKind>(kind);
  return h;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

int parse_label(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  const std::string t = trim(field);
  if (t.empty()) return -1;
  int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || v < -1)
    throw Error(ErrorCode::MalformedFile, path.string() + ":" + std::to_string(line) + ": bad label '" + t + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

// Label vectors whose entries are all -1 are dropped entirely.
void attach_labels(EmbeddingMatrix& m, std::vector<int> cls, std::vector<int> dom) {
  const auto any = [](const std::vector<int>& v) {
    return std::any_of(v.begin(), v.end(), [](int x) { return x >= 0; });
  };
  if (any(cls)) m.class_labels = std::move(cls);
  if (any(dom)) m.domain_labels = std::move(dom);
}

void load_sidecar(EmbeddingMatrix& m, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::string> ids;
  std::vector<int> cls;
  std::vector<int> dom;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 3)
      throw Error(ErrorCode::MalformedFile, path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
    ids.push_back(f[0]);
    cls.push_back(parse_label(f[1], path, lineno));
    dom.push_back(parse_label(f[2], path, lineno));
  }
  if (ids.size() != m.rows())
    throw Error(ErrorCode::LabelCountMismatch, path.string() + " has " + std::to_string(ids.size()) +
                                                   " rows, embeddings have " + std::to_string(m.rows()));
  m.ids = std::move(ids);
  attach_labels(m, std::move(cls), std::move(dom));
}

bool default_ids(const EmbeddingMatrix& m) {
  for (std::size_t i = 0; i < m.ids.size(); ++i)
    if (m.ids[i] != std::to_string(i)) return false;
  return true;
}

}  // namespace

std::filesystem::path labels_path(const std::filesystem::path& path) { return path.string() + ".labels"; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::Io, "read failed for " + path.string());
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot create " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::Io, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::Io, "cannot move " + tmp.string() + " to " + path.string());
  }
}

std::string encode_embeddings(const Matrix& m, PayloadKind kind) {
  if (!all_finite(m.values())) throw Error(ErrorCode::NonFinite, "refusing to write NaN or Inf");
  if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX)
    throw Error(ErrorCode::InvalidArgument, "matrix too large for a 32-bit header");
  Writer w;
  put_header(w, Header{kFormatVersion, static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols()), kind});
  for (double v : m.values()) w.put(static_cast<float>(v));
  return w.take();
}

EmbeddingMatrix parse_embeddings(std::string_view bytes, Header* header_out) {
  Reader r(bytes);
  const Header h = get_header(r, bytes);
  if (h.kind == PayloadKind::StateSnapshot)
    throw Error(ErrorCode::WrongPayloadKind, "file holds a state snapshot, not embeddings");
  const std::uint64_t expected = static_cast<std::uint64_t>(h.count) * h.dim * 4;
  if (r.remaining() < expected)
    throw Error(ErrorCode::TruncatedPayload, "payload has " + std::to_string(r.remaining()) + " bytes, header promises " +
                                                 std::to_string(expected));
  if (r.remaining() > expected)
    throw Error(ErrorCode::TruncatedPayload, "payload has " + std::to_string(r.remaining() - expected) +
                                                 " trailing bytes beyond the declared size");
  Matrix m(h.count, h.dim);
  for (std::size_t i = 0; i < static_cast<std::size_t>(h.count) * h.dim; ++i) {
    const float v = r.get<float>();
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinitePayload, "payload value " + std::to_string(i) + " is not finite");
    m.data()[i] = static_cast<double>(v);
  }
  if (header_out) *header_out = h;
  return EmbeddingMatrix(std::move(m));
}

void write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path, PayloadKind kind) {
  matrix.validate();
  write_file_atomic(path, encode_embeddings(matrix.data, kind));
  const auto sidecar = labels_path(path);
  if (matrix.class_labels || matrix.domain_labels || !default_ids(matrix)) {
    std::string text;
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
      text += matrix.ids[i];
      text += '\t';
      text += std::to_string(matrix.class_labels ? (*matrix.class_labels)[i] : -1);
      text += '\t';
      text += std::to_string(matrix.domain_labels ? (*matrix.domain_labels)[i] : -1);
      text += '\n';
    }
    write_file_atomic(sidecar, text);
  } else {
    std::error_code ec;
    std::filesystem::remove(sidecar, ec);
  }
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  EmbeddingMatrix m;
  try {
    m = parse_embeddings(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
  const auto sidecar = labels_path(path);
  if (std::filesystem::exists(sidecar)) load_sidecar(m, sidecar);
  return m;
}

EmbeddingMatrix read_embeddings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  EmbeddingMatrix m;
  std::vector<int> cls;
  std::vector<int> dom;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  Vector row;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() < 4)
      throw Error(ErrorCode::MalformedFile, path.string() + ":" + std::to_string(lineno) + ": need id,class,domain,v0...");
    row.clear();
    bool numeric = true;
    for (std::size_t j = 3; j < f.size() && numeric; ++j) {
      const std::string t = trim(f[j]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      numeric = ec == std::errc() && ptr == t.data() + t.size() && !t.empty();
      row.push_back(v);
    }
    if (!numeric) {
      if (m.rows() == 0 && cls.empty()) continue;  // header line
      throw Error(ErrorCode::MalformedFile, path.string() + ":" + std::to_string(lineno) + ": non-numeric value");
    }
    if (dim == 0) dim = row.size();
    if (row.size() != dim)
      throw Error(ErrorCode::MalformedFile, path.string() + ":" + std::to_string(lineno) + ": ragged row");
    // Round through float so the CSV path matches the 32-bit binary path.
    for (double& v : row) {
      v = static_cast<double>(static_cast<float>(v));
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFinitePayload, path.string() + ":" + std::to_string(lineno));
    }
    m.data.append_row(row);
    m.ids.push_back(trim(f[0]));
    cls.push_back(parse_label(f[1], path, lineno));
    dom.push_back(parse_label(f[2], path, lineno));
  }
  attach_labels(m, std::move(cls), std::move(dom));
  return m;
}

TextBank read_text_bank(const std::filesystem::path& path, const std::filesystem::path& names_path) {
  EmbeddingMatrix m;
  try {
    m = parse_embeddings(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
  std::ifstream in(names_path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + names_path.string());
  TextBank bank;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (!line.empty()) bank.names.push_back(line);
  }
  if (bank.names.size() != m.rows())
    throw Error(ErrorCode::NameCountMismatch, names_path.string() + " has " + std::to_string(bank.names.size()) +
                                                  " names for " + std::to_string(m.rows()) + " text rows");
  bank.features = std::move(m.data);
  bank.validate();
  return bank;
}

void write_text_bank(const TextBank& bank, const std::filesystem::path& path, const std::filesystem::path& names_path) {
  bank.validate();
  write_file_atomic(path, encode_embeddings(bank.features, PayloadKind::TextBank));
  std::string names;
  for (const auto& n : bank.names) names += n + "\n";
  write_file_atomic(names_path, names);
}

std::string serialize_state(const StreamState& s) {
  const EngineConfig& c = s.config;
  const std::size_t dim = s.model ? s.model->dim() : s.bootstrap_buffer.cols();
  Writer w;
  put_header(w, Header{kFormatVersion, static_cast<std::uint32_t>(c.clusters), static_cast<std::uint32_t>(dim),
                       PayloadKind::StateSnapshot});
  w.put<std::uint64_t>(c.clusters);
  w.put<double>(c.tau);
  w.put<double>(c.eta);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.mode));
  w.put<std::uint64_t>(c.batch_size);
  w.put<std::uint64_t>(c.seed);
  w.put<std::uint64_t>(c.max_iters);
  w.put<double>(c.tol);
  w.u8(c.normalize_input);
  w.u8(c.normalize_shifts);
  w.u8(c.ema_additive);
  w.put<std::uint64_t>(s.batches_seen);
  w.put<std::uint64_t>(s.samples_seen);
  w.matrix(s.bootstrap_buffer);
  w.u8(s.model.has_value());
  if (s.model) {
    w.matrix(s.model->centroids);
    w.counts(s.model->counts);
  }
  w.matrix(s.calib.cluster_means);
  w.doubles(s.calib.global_mean);
  w.matrix(s.calib.text_shifts);
  w.matrix(s.running_sums);
  w.counts(s.running_counts);
  w.doubles(s.global_sum);
  w.put<std::uint64_t>(s.global_count);
  return w.take();
}

StreamState deserialize_state(std::string_view bytes) {
  Reader r(bytes);
  const Header h = get_header(r, bytes);
  if (h.kind != PayloadKind::StateSnapshot)
    throw Error(ErrorCode::WrongPayloadKind, "file holds embeddings, not a state snapshot");
  StreamState s;
  EngineConfig& c = s.config;
  c.clusters = r.get<std::uint64_t>();
  c.tau = r.get<double>();
  c.eta = r.get<double>();
  const auto mode = r.get<std::uint32_t>();
  if (mode > 1) throw Error(ErrorCode::MalformedFile, "unknown update mode " + std::to_string(mode));
  c.mode = static_cast<UpdateMode>(mode);
  c.batch_size = r.get<std::uint64_t>();
  c.seed = r.get<std::uint64_t>();
  c.max_iters = r.get<std::uint64_t>();
  c.tol = r.get<double>();
  c.normalize_input = r.u8();
  c.normalize_shifts = r.u8();
  c.ema_additive = r.u8();
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedFile, "snapshot config: " + e.detail());
  }
  s.batches_seen = r.get<std::uint64_t>();
  s.samples_seen = r.get<std::uint64_t>();
  s.bootstrap_buffer = r.matrix();
  if (r.u8()) {
    ClusterModel m;
    m.centroids = r.matrix();
    m.counts = r.counts();
    s.model = std::move(m);
  }
  s.calib.cluster_means = r.matrix();
  s.calib.global_mean = r.doubles();
  s.calib.text_shifts = r.matrix();
  s.running_sums = r.matrix();
  s.running_counts = r.counts();
  s.global_sum = r.doubles();
  s.global_count = r.get<std::uint64_t>();
  if (r.remaining() != 0) throw Error(ErrorCode::MalformedFile, "snapshot has trailing bytes");

  if (s.model) {
    const std::size_t m = s.model->size();
    const std::size_t d = s.model->dim();
    const bool ok = m == c.clusters && s.model->counts.size() == m && s.calib.cluster_means.rows() == m &&
                    s.calib.cluster_means.cols() == d && s.calib.global_mean.size() == d &&
                    s.calib.text_shifts.rows() == m && s.calib.text_shifts.cols() == d &&
                    (c.mode == UpdateMode::Ema ||
                     (s.running_sums.rows() == m && s.running_sums.cols() == d && s.running_counts.size() == m &&
                      s.global_sum.size() == d));
    if (!ok) throw Error(ErrorCode::MalformedFile, "snapshot sections have inconsistent shapes");
  }
  return s;
}

void snapshot_state(const StreamState& state, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_state(state));
}

StreamState restore_state(const std::filesystem::path& path) {
  try {
    return deserialize_state(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

}  // namespace umfc::io
