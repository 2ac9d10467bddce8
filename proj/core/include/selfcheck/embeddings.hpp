#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace selfcheck {

// Immutable-after-load token -> vector map. Every vector has length
// dimension() and is non-zero.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension);

  // Throws DataError on wrong length, zero vector or duplicate token.
  void add(std::string token, std::vector<float> vector);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return index_.size(); }
  bool contains(std::string_view token) const;

  // Empty span when the token has no embedding.
  std::span<const float> find(std::string_view token) const;
  // Euclidean norm of the stored vector; 0 when absent.
  double norm(std::string_view token) const;

  // Tokens in insertion order.
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b);

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::size_t dimension_;
  std::vector<std::string> tokens_;
  std::vector<float> data_;
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
};

// word2vec binary layout: "<vocab> <dim>\n" then per entry the token bytes
// terminated by a space, dim little-endian float32 values and an optional
// newline. Errors are ParseError with the byte offset of the failure.
EmbeddingTable load_word2vec_binary(const std::filesystem::path& path);
EmbeddingTable parse_word2vec_binary(std::string_view bytes);

// word2vec text layout: "token v1 ... vd" per line with an optional
// "<vocab> <dim>" header line. Errors carry the 1-based line number.
EmbeddingTable load_word2vec_text(const std::filesystem::path& path);
EmbeddingTable parse_word2vec_text(std::string_view text);

void save_word2vec_binary(const EmbeddingTable& table, const std::filesystem::path& path);
// Values are written with max_digits10 so a reload is bit-exact.
void save_word2vec_text(const EmbeddingTable& table, const std::filesystem::path& path);

// Picks the loader from the extension: ".bin" is binary, anything else text.
EmbeddingTable load_embeddings(const std::filesystem::path& path);

// u.v / (|u||v|) clamped to [-1, 1]. Throws DataError on length mismatch or
// a zero vector.
double cosine_similarity(std::span<const float> u, std::span<const float> v);

// { t' in vocab : cos(t, t') >= theta }. The token itself is always a member.
// A token without an embedding yields the singleton {token}; vocabulary
// tokens without embeddings never join another token's neighborhood.
std::set<std::string> neighborhood(const std::string& token, const std::set<std::string>& vocab,
                                   const EmbeddingTable& table, double theta);

}  // namespace selfcheck
