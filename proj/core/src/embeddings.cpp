#include "selfcheck/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "selfcheck/errors.hpp"

namespace selfcheck {

namespace {

using Kind = ParseError::Kind;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double l2_norm(std::span<const float> v) {
  double sum = 0.0;
  for (float x : v) sum += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(sum);
}

double dot(std::span<const float> u, std::span<const float> v) {
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    sum += static_cast<double>(u[i]) * static_cast<double>(v[i]);
  }
  return sum;
}

template <typename T>
bool parse_integer(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_float(std::string_view s, float& out) {
  // from_chars for floating point is available in libstdc++ 11.
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

float read_le_float(const char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, sizeof bits);
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) |
           (bits >> 24);
  }
  float value;
  std::memcpy(&value, &bits, sizeof value);
  return value;
}

void write_le_float(std::ostream& out, float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, sizeof bits);
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) |
           (bits >> 24);
  }
  char buf[4];
  std::memcpy(buf, &bits, sizeof buf);
  out.write(buf, sizeof buf);
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw DataError("embedding dimension must be positive");
}

void EmbeddingTable::add(std::string token, std::vector<float> vector) {
  if (vector.size() != dimension_) {
    throw DataError("embedding for '" + token + "' has length " + std::to_string(vector.size()) +
                    ", expected " + std::to_string(dimension_));
  }
  const double n = l2_norm(vector);
  if (n == 0.0) throw DataError("embedding for '" + token + "' is the zero vector");
  if (index_.contains(token)) throw DataError("duplicate embedding token '" + token + "'");
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
  data_.insert(data_.end(), vector.begin(), vector.end());
  norms_.push_back(n);
}

bool EmbeddingTable::contains(std::string_view token) const {
  return index_.find(token) != index_.end();
}

std::span<const float> EmbeddingTable::find(std::string_view token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return {};
  return std::span<const float>(data_).subspan(it->second * dimension_, dimension_);
}

double EmbeddingTable::norm(std::string_view token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? 0.0 : norms_[it->second];
}

bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
  if (a.dimension_ != b.dimension_ || a.size() != b.size()) return false;
  for (const std::string& token : a.tokens_) {
    const auto u = a.find(token);
    const auto v = b.find(token);
    if (v.empty()) return false;
    if (std::memcmp(u.data(), v.data(), u.size_bytes()) != 0) return false;
  }
  return true;
}

EmbeddingTable parse_word2vec_binary(std::string_view bytes) {
  const std::size_t eol = bytes.find('\n');
  if (eol == std::string_view::npos) {
    throw ParseError(Kind::MalformedHeader, 0, "word2vec binary: header line not terminated");
  }
  const auto header = split_fields(bytes.substr(0, eol));
  long long vocab = 0;
  long long dim = 0;
  if (header.size() != 2 || !parse_integer(header[0], vocab) || !parse_integer(header[1], dim) ||
      vocab < 0) {
    throw ParseError(Kind::MalformedHeader, 0,
                     "word2vec binary: header must be '<vocab_size> <dim>'");
  }
  if (dim <= 0) {
    throw ParseError(Kind::BadDimension, 0,
                     "word2vec binary: dimension must be positive, got " + std::to_string(dim));
  }

  EmbeddingTable table(static_cast<std::size_t>(dim));
  const std::size_t record_floats = static_cast<std::size_t>(dim);
  const std::size_t float_bytes = record_floats * sizeof(float);
  std::size_t pos = eol + 1;
  std::vector<float> vec(record_floats);
  for (long long entry = 0; entry < vocab; ++entry) {
    while (pos < bytes.size() && (bytes[pos] == '\n' || bytes[pos] == '\r')) ++pos;
    const std::size_t token_start = pos;
    while (pos < bytes.size() && bytes[pos] != ' ') ++pos;
    if (pos >= bytes.size()) {
      throw ParseError(Kind::Truncated, token_start,
                       "word2vec binary: truncated at entry " + std::to_string(entry) + " of " +
                           std::to_string(vocab) + " (byte " + std::to_string(token_start) + ")");
    }
    std::string token(bytes.substr(token_start, pos - token_start));
    ++pos;
    if (bytes.size() - pos < float_bytes) {
      throw ParseError(Kind::Truncated, pos,
                       "word2vec binary: truncated vector for '" + token + "' at byte " +
                           std::to_string(pos));
    }
    for (std::size_t d = 0; d < record_floats; ++d) {
      vec[d] = read_le_float(bytes.data() + pos + d * sizeof(float));
    }
    if (table.contains(token)) {
      throw ParseError(Kind::DuplicateToken, token_start,
                       "word2vec binary: duplicate token '" + token + "' at byte " +
                           std::to_string(token_start));
    }
    if (l2_norm(vec) == 0.0) {
      throw ParseError(Kind::ZeroVector, token_start,
                       "word2vec binary: zero vector for '" + token + "' at byte " +
                           std::to_string(token_start));
    }
    table.add(std::move(token), vec);
    pos += float_bytes;
    if (pos < bytes.size() && bytes[pos] == '\n') ++pos;
  }
  return table;
}

EmbeddingTable load_word2vec_binary(const std::filesystem::path& path) {
  return parse_word2vec_binary(read_file(path));
}

EmbeddingTable parse_word2vec_text(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::size_t start = 0;
  std::size_t line_no = 1;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!split_fields(line).empty()) lines.emplace_back(line_no, line);
    ++line_no;
    start = end + 1;
  }

  std::size_t first = 0;
  long long declared_vocab = -1;
  long long dim = -1;
  if (!lines.empty()) {
    const auto fields = split_fields(lines[0].second);
    long long a = 0;
    long long b = 0;
    if (fields.size() == 2 && parse_integer(fields[0], a) && parse_integer(fields[1], b)) {
      if (a < 0) {
        throw ParseError(Kind::MalformedHeader, lines[0].first,
                         "word2vec text: negative vocabulary size in header");
      }
      if (b <= 0) {
        throw ParseError(Kind::BadDimension, lines[0].first,
                         "word2vec text: dimension must be positive");
      }
      declared_vocab = a;
      dim = b;
      first = 1;
    }
  }
  if (dim < 0) {
    if (first >= lines.size()) {
      throw ParseError(Kind::MalformedHeader, 1, "word2vec text: no entries and no header");
    }
    dim = static_cast<long long>(split_fields(lines[first].second).size()) - 1;
    if (dim <= 0) {
      throw ParseError(Kind::BadDimension, lines[first].first,
                       "word2vec text: line " + std::to_string(lines[first].first) +
                           " has no vector values");
    }
  }

  EmbeddingTable table(static_cast<std::size_t>(dim));
  std::vector<float> vec(static_cast<std::size_t>(dim));
  for (std::size_t i = first; i < lines.size(); ++i) {
    const auto [number, line] = lines[i];
    const auto fields = split_fields(line);
    if (fields.size() != static_cast<std::size_t>(dim) + 1) {
      throw ParseError(Kind::RaggedRow, number,
                       "word2vec text: line " + std::to_string(number) + " has " +
                           std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(dim + 1));
    }
    for (std::size_t d = 0; d < vec.size(); ++d) {
      if (!parse_float(fields[d + 1], vec[d])) {
        throw ParseError(Kind::BadNumber, number,
                         "word2vec text: line " + std::to_string(number) + ": bad number '" +
                             std::string(fields[d + 1]) + "'");
      }
    }
    std::string token(fields[0]);
    if (table.contains(token)) {
      throw ParseError(Kind::DuplicateToken, number,
                       "word2vec text: line " + std::to_string(number) + ": duplicate token '" +
                           token + "'");
    }
    if (l2_norm(vec) == 0.0) {
      throw ParseError(Kind::ZeroVector, number,
                       "word2vec text: line " + std::to_string(number) + ": zero vector");
    }
    table.add(std::move(token), vec);
  }
  if (declared_vocab >= 0 && static_cast<std::size_t>(declared_vocab) != table.size()) {
    throw ParseError(Kind::Truncated, line_no - 1,
                     "word2vec text: header declares " + std::to_string(declared_vocab) +
                         " entries, found " + std::to_string(table.size()));
  }
  return table;
}

EmbeddingTable load_word2vec_text(const std::filesystem::path& path) {
  return parse_word2vec_text(read_file(path));
}

void save_word2vec_binary(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << table.size() << ' ' << table.dimension() << '\n';
  for (const std::string& token : table.tokens()) {
    out << token << ' ';
    for (float v : table.find(token)) write_le_float(out, v);
    out << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

void save_word2vec_text(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(std::numeric_limits<float>::max_digits10);
  out << table.size() << ' ' << table.dimension() << '\n';
  for (const std::string& token : table.tokens()) {
    out << token;
    for (float v : table.find(token)) out << ' ' << v;
    out << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  return path.extension() == ".bin" ? load_word2vec_binary(path) : load_word2vec_text(path);
}

double cosine_similarity(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw DataError("cosine_similarity: length mismatch (" + std::to_string(u.size()) + " vs " +
                    std::to_string(v.size()) + ")");
  }
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) throw DataError("cosine_similarity: zero vector");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

std::set<std::string> neighborhood(const std::string& token, const std::set<std::string>& vocab,
                                   const EmbeddingTable& table, double theta) {
  std::set<std::string> out{token};
  const auto u = table.find(token);
  if (u.empty()) return out;
  const double nu = table.norm(token);
  for (const std::string& other : vocab) {
    if (other == token) continue;
    const auto v = table.find(other);
    if (v.empty()) continue;
    const double sim = std::clamp(dot(u, v) / (nu * table.norm(other)), -1.0, 1.0);
    if (sim >= theta) out.insert(other);
  }
  return out;
}

}  // namespace selfcheck
