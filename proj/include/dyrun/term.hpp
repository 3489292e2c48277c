#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace dyrun {

/// Key types. The numeric values are the key-type bytes of the wire encoding.
enum class KeyType : std::uint8_t { aenc = 0, adec = 1, sign = 2, verify = 3, senc = 4 };

std::string_view to_string(KeyType type);
std::optional<KeyType> key_type_from_string(std::string_view name);

/// Key type able to open a term sealed under `type`: aenc -> adec,
/// sign -> verify, senc -> senc. Opening types have no entry.
std::optional<KeyType> opening_type(KeyType type);

/// Whether keys of this type may be used to seal.
bool is_sealing_type(KeyType type);

class TermError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DecodeError : public std::runtime_error {
 public:
  DecodeError(std::size_t offset, const std::string& what);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

enum class TermKind : std::uint8_t {
  integer = 0x01,
  tag = 0x02,
  nonce = 0x03,
  pair = 0x04,
  key = 0x05,
  seal = 0x06,
  exp = 0x07,
  list = 0x08,
};

/// Immutable symbolic message. Copies share the underlying node, so terms are
/// cheap to pass by value and safe to share across threads.
///
/// Every node carries its canonical encoding; equality, ordering and hashing
/// are all defined on that encoding. Since the encoding is injective and DH
/// exponents are kept in encoding order, two terms are equal exactly when they
/// denote the same value in the DH quotient.
class Term {
 public:
  static Term integer(std::int64_t value);
  /// Tag names are nonempty, dot-separated segments without whitespace,
  /// quotes, brackets or parentheses.
  static Term tag(std::string name);
  static Term nonce(std::uint64_t id);
  static Term pair(Term left, Term right);
  static Term list(std::vector<Term> items);
  static Term key(KeyType type, Term seed);
  /// Structural constructor: `key` must be a Key term of any type.
  static Term sealed(Term key, Term payload);
  /// Builds base^(exponents). A base that is itself an Exp is flattened and
  /// the exponent multiset is sorted by encoding. Throws on an empty multiset.
  static Term exp(Term base, std::vector<Term> exponents);

  TermKind kind() const noexcept { return node_->kind; }
  bool is(TermKind k) const noexcept { return node_->kind == k; }

  std::int64_t int_value() const;
  const std::string& tag_name() const;
  std::uint64_t nonce_id() const;
  const Term& left() const;
  const Term& right() const;
  std::span<const Term> items() const;  // List items
  KeyType key_type() const;
  const Term& seed() const;
  const Term& seal_key() const;
  const Term& payload() const;
  const Term& exp_base() const;
  std::span<const Term> exponents() const;

  /// Whether this is a Key term of the given type.
  bool is_key(KeyType type) const noexcept;

  /// Canonical encoding as raw bytes held in a string.
  const std::string& encoding() const noexcept { return node_->encoding; }
  std::size_t hash() const noexcept { return node_->hash; }

  friend bool operator==(const Term& a, const Term& b) noexcept {
    return a.node_ == b.node_ || a.node_->encoding == b.node_->encoding;
  }
  friend std::strong_ordering operator<=>(const Term& a, const Term& b) noexcept {
    int c = a.node_->encoding.compare(b.node_->encoding);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  struct Node {
    TermKind kind;
    std::int64_t int_value = 0;
    std::uint64_t nonce_id = 0;
    KeyType key_type = KeyType::aenc;
    std::string tag;
    std::vector<Term> children;
    std::string encoding;
    std::size_t hash = 0;
  };

  explicit Term(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Term finish(Node node);

  std::shared_ptr<const Node> node_;
};

struct TermHash {
  std::size_t operator()(const Term& t) const noexcept { return t.hash(); }
};

bool is_valid_tag_name(std::string_view name);

// --- Nonces -----------------------------------------------------------------

enum class NonceOrigin : std::uint8_t { honest, attacker };

std::string_view to_string(NonceOrigin origin);

/// Per-run nonce allocator. Ids come from a monotone counter starting at 0;
/// each id remembers whether an honest agent or the attacker created it.
class NonceRegistry {
 public:
  Term mk_nonce(NonceOrigin origin);
  /// Records an externally chosen id (e.g. when rebuilding from a trace).
  void record(std::uint64_t id, NonceOrigin origin);
  std::optional<NonceOrigin> origin(std::uint64_t id) const;
  bool is_attacker_nonce(const Term& t) const;
  std::uint64_t issued() const noexcept { return next_; }
  std::size_t recorded() const noexcept { return origins_.size(); }

 private:
  std::uint64_t next_ = 0;
  std::unordered_map<std::uint64_t, NonceOrigin> origins_;
};

// --- Keys and sealing ---------------------------------------------------------

Term mk_key(KeyType type, Term seed);
Term mk_aenc_key(NonceRegistry& registry);
Term mk_sign_key(NonceRegistry& registry);
Term mk_senc_key(NonceRegistry& registry);

/// Public half of an adec or sign key. Throws TermError("not a secret key")
/// for anything else.
Term pkey(const Term& secret_key);

/// Seals `payload` under `key`; the key must have a sealing type.
Term seal(const Term& key, Term payload);

/// Total: returns the payload only when `key` is the opening key matching the
/// sealing key of `sealed` (same seed, paired type).
std::optional<Term> open(const Term& key, const Term& sealed);

/// Multiplies in one more exponent.
Term dh_exp(const Term& base, Term exponent);

// --- Encoding ---------------------------------------------------------------

std::vector<std::uint8_t> canonical_encode(const Term& t);
Term canonical_decode(std::span<const std::uint8_t> bytes);
Term canonical_decode(std::string_view bytes);

// --- Structure --------------------------------------------------------------

/// Reflexive subterm test over the whole syntax tree (Exp base and exponents
/// included).
bool is_subterm(const Term& t, const Term& container);

/// All distinct subterms, container included.
std::vector<Term> subterms(const Term& t);

struct Exact {
  Term value;
};
struct Bind {
  std::string name;
};
struct TagLit {
  std::string name;
};
using PatternItem = std::variant<Exact, Bind, TagLit>;
using Bindings = std::map<std::string, Term>;

/// Matches a list pattern. A name bound twice must capture equal terms.
std::optional<Bindings> match_pattern(std::span<const PatternItem> pattern, const Term& t);

/// Rebuilds the element sequence of a pattern under `bindings`.
std::vector<Term> substitute(std::span<const PatternItem> pattern, const Bindings& bindings);

}  // namespace dyrun

template <>
struct std::hash<dyrun::Term> {
  std::size_t operator()(const dyrun::Term& t) const noexcept { return t.hash(); }
};
