#include "dyrun/term.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

namespace dyrun {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
}

std::uint32_t checked_count(std::size_t n) {
  if (n > 0xffffffffu) throw TermError("term has too many elements to encode");
  return static_cast<std::uint32_t>(n);
}

const Term& child(const std::vector<Term>& children, std::size_t i) { return children.at(i); }

}  // namespace

std::string_view to_string(KeyType type) {
  switch (type) {
    case KeyType::aenc: return "aenc";
    case KeyType::adec: return "adec";
    case KeyType::sign: return "sign";
    case KeyType::verify: return "verify";
    case KeyType::senc: return "senc";
  }
  return "?";
}

std::optional<KeyType> key_type_from_string(std::string_view name) {
  for (auto t : {KeyType::aenc, KeyType::adec, KeyType::sign, KeyType::verify, KeyType::senc}) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

std::optional<KeyType> opening_type(KeyType type) {
  switch (type) {
    case KeyType::aenc: return KeyType::adec;
    case KeyType::sign: return KeyType::verify;
    case KeyType::senc: return KeyType::senc;
    default: return std::nullopt;
  }
}

bool is_sealing_type(KeyType type) { return opening_type(type).has_value(); }

DecodeError::DecodeError(std::size_t offset, const std::string& what)
    : std::runtime_error("decode error at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}

bool is_valid_tag_name(std::string_view name) {
  if (name.empty() || name.front() == '.' || name.back() == '.') return false;
  char prev = 0;
  for (char c : name) {
    auto u = static_cast<unsigned char>(c);
    if (u <= 0x20 || c == '"' || c == '\\' || c == '(' || c == ')' || c == '[' || c == ']') return false;
    if (c == '.' && prev == '.') return false;
    prev = c;
  }
  return true;
}

// --- Construction -------------------------------------------------------------

Term Term::finish(Node node) {
  std::string& enc = node.encoding;
  enc.push_back(static_cast<char>(node.kind));
  switch (node.kind) {
    case TermKind::integer: put_u64(enc, static_cast<std::uint64_t>(node.int_value)); break;
    case TermKind::tag:
      put_u32(enc, checked_count(node.tag.size()));
      enc += node.tag;
      break;
    case TermKind::nonce: put_u64(enc, node.nonce_id); break;
    case TermKind::pair:
    case TermKind::seal:
      enc += node.children[0].encoding();
      enc += node.children[1].encoding();
      break;
    case TermKind::key:
      enc.push_back(static_cast<char>(node.key_type));
      enc += node.children[0].encoding();
      break;
    case TermKind::exp:
      enc += node.children[0].encoding();
      put_u32(enc, checked_count(node.children.size() - 1));
      for (std::size_t i = 1; i < node.children.size(); ++i) enc += node.children[i].encoding();
      break;
    case TermKind::list:
      put_u32(enc, checked_count(node.children.size()));
      for (const auto& c : node.children) enc += c.encoding();
      break;
  }
  node.hash = std::hash<std::string_view>{}(enc);
  return Term(std::make_shared<const Node>(std::move(node)));
}

Term Term::integer(std::int64_t value) {
  Node n;
  n.kind = TermKind::integer;
  n.int_value = value;
  return finish(std::move(n));
}

Term Term::tag(std::string name) {
  if (!is_valid_tag_name(name)) throw TermError("invalid tag name: \"" + name + "\"");
  Node n;
  n.kind = TermKind::tag;
  n.tag = std::move(name);
  return finish(std::move(n));
}

Term Term::nonce(std::uint64_t id) {
  Node n;
  n.kind = TermKind::nonce;
  n.nonce_id = id;
  return finish(std::move(n));
}

Term Term::pair(Term left, Term right) {
  Node n;
  n.kind = TermKind::pair;
  n.children = {std::move(left), std::move(right)};
  return finish(std::move(n));
}

Term Term::list(std::vector<Term> items) {
  Node n;
  n.kind = TermKind::list;
  n.children = std::move(items);
  return finish(std::move(n));
}

Term Term::key(KeyType type, Term seed) {
  Node n;
  n.kind = TermKind::key;
  n.key_type = type;
  n.children = {std::move(seed)};
  return finish(std::move(n));
}

Term Term::sealed(Term key, Term payload) {
  if (!key.is(TermKind::key)) throw TermError("seal key is not a key term");
  Node n;
  n.kind = TermKind::seal;
  n.children = {std::move(key), std::move(payload)};
  return finish(std::move(n));
}

Term Term::exp(Term base, std::vector<Term> exponents) {
  if (exponents.empty()) throw TermError("exponent multiset must be nonempty");
  Node n;
  n.kind = TermKind::exp;
  if (base.is(TermKind::exp)) {
    auto inner = base.exponents();
    exponents.insert(exponents.end(), inner.begin(), inner.end());
    base = base.exp_base();
  }
  std::sort(exponents.begin(), exponents.end());
  n.children.reserve(exponents.size() + 1);
  n.children.push_back(std::move(base));
  for (auto& e : exponents) n.children.push_back(std::move(e));
  return finish(std::move(n));
}

// --- Accessors -----------------------------------------------------------------

namespace {
[[noreturn]] void wrong_kind(const char* what) { throw TermError(std::string("term is not ") + what); }
}  // namespace

std::int64_t Term::int_value() const {
  if (!is(TermKind::integer)) wrong_kind("an integer");
  return node_->int_value;
}
const std::string& Term::tag_name() const {
  if (!is(TermKind::tag)) wrong_kind("a tag");
  return node_->tag;
}
std::uint64_t Term::nonce_id() const {
  if (!is(TermKind::nonce)) wrong_kind("a nonce");
  return node_->nonce_id;
}
const Term& Term::left() const {
  if (!is(TermKind::pair)) wrong_kind("a pair");
  return child(node_->children, 0);
}
const Term& Term::right() const {
  if (!is(TermKind::pair)) wrong_kind("a pair");
  return child(node_->children, 1);
}
std::span<const Term> Term::items() const {
  if (!is(TermKind::list)) wrong_kind("a list");
  return node_->children;
}
KeyType Term::key_type() const {
  if (!is(TermKind::key)) wrong_kind("a key");
  return node_->key_type;
}
const Term& Term::seed() const {
  if (!is(TermKind::key)) wrong_kind("a key");
  return child(node_->children, 0);
}
const Term& Term::seal_key() const {
  if (!is(TermKind::seal)) wrong_kind("a sealed term");
  return child(node_->children, 0);
}
const Term& Term::payload() const {
  if (!is(TermKind::seal)) wrong_kind("a sealed term");
  return child(node_->children, 1);
}
const Term& Term::exp_base() const {
  if (!is(TermKind::exp)) wrong_kind("a DH term");
  return child(node_->children, 0);
}
std::span<const Term> Term::exponents() const {
  if (!is(TermKind::exp)) wrong_kind("a DH term");
  return std::span<const Term>(node_->children).subspan(1);
}

bool Term::is_key(KeyType type) const noexcept { return is(TermKind::key) && node_->key_type == type; }

// --- Nonces ---------------------------------------------------------------------

std::string_view to_string(NonceOrigin origin) { return origin == NonceOrigin::honest ? "honest" : "attacker"; }

Term NonceRegistry::mk_nonce(NonceOrigin origin) {
  std::uint64_t id = next_++;
  origins_[id] = origin;
  return Term::nonce(id);
}

void NonceRegistry::record(std::uint64_t id, NonceOrigin origin) {
  origins_[id] = origin;
  next_ = std::max(next_, id + 1);
}

std::optional<NonceOrigin> NonceRegistry::origin(std::uint64_t id) const {
  auto it = origins_.find(id);
  if (it == origins_.end()) return std::nullopt;
  return it->second;
}

bool NonceRegistry::is_attacker_nonce(const Term& t) const {
  return t.is(TermKind::nonce) && origin(t.nonce_id()) == NonceOrigin::attacker;
}

// --- Keys and sealing -----------------------------------------------------------

Term mk_key(KeyType type, Term seed) { return Term::key(type, std::move(seed)); }
Term mk_aenc_key(NonceRegistry& r) { return mk_key(KeyType::adec, r.mk_nonce(NonceOrigin::honest)); }
Term mk_sign_key(NonceRegistry& r) { return mk_key(KeyType::sign, r.mk_nonce(NonceOrigin::honest)); }
Term mk_senc_key(NonceRegistry& r) { return mk_key(KeyType::senc, r.mk_nonce(NonceOrigin::honest)); }

Term pkey(const Term& sk) {
  if (sk.is_key(KeyType::adec)) return Term::key(KeyType::aenc, sk.seed());
  if (sk.is_key(KeyType::sign)) return Term::key(KeyType::verify, sk.seed());
  throw TermError("not a secret key");
}

Term seal(const Term& key, Term payload) {
  if (!key.is(TermKind::key)) throw TermError("seal key is not a key term");
  if (!is_sealing_type(key.key_type())) throw TermError("cannot seal with opening key");
  return Term::sealed(key, std::move(payload));
}

std::optional<Term> open(const Term& key, const Term& sealed) {
  if (!key.is(TermKind::key) || !sealed.is(TermKind::seal)) return std::nullopt;
  const Term& used = sealed.seal_key();
  auto expected = opening_type(used.key_type());
  if (!expected || key.key_type() != *expected || key.seed() != used.seed()) return std::nullopt;
  return sealed.payload();
}

Term dh_exp(const Term& base, Term exponent) { return Term::exp(base, {std::move(exponent)}); }

// --- Encoding ---------------------------------------------------------------------

std::vector<std::uint8_t> canonical_encode(const Term& t) {
  const auto& e = t.encoding();
  return {e.begin(), e.end()};
}

namespace {

constexpr std::size_t kMaxDecodeDepth = 1024;

class Decoder {
 public:
  explicit Decoder(std::string_view in) : in_(in) {}

  Term run() {
    Term t = term(0);
    if (pos_ != in_.size()) throw DecodeError(pos_, "trailing bytes");
    return t;
  }

 private:
  std::uint8_t byte() {
    if (pos_ >= in_.size()) throw DecodeError(pos_, "unexpected end of input");
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | static_cast<std::uint8_t>(in_[pos_++]);
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<std::uint8_t>(in_[pos_++]);
    return v;
  }
  void need(std::size_t n) {
    if (in_.size() - pos_ < n) throw DecodeError(pos_, "unexpected end of input");
  }

  Term term(std::size_t depth) {
    if (depth > kMaxDecodeDepth) throw DecodeError(pos_, "nesting too deep");
    std::size_t start = pos_;
    std::uint8_t ctor = byte();
    switch (static_cast<TermKind>(ctor)) {
      case TermKind::integer: return Term::integer(static_cast<std::int64_t>(u64()));
      case TermKind::tag: {
        std::uint32_t len = u32();
        need(len);
        std::string name(in_.substr(pos_, len));
        if (!is_valid_tag_name(name)) throw DecodeError(pos_, "invalid tag name");
        pos_ += len;
        return Term::tag(std::move(name));
      }
      case TermKind::nonce: return Term::nonce(u64());
      case TermKind::pair: {
        Term l = term(depth + 1);
        Term r = term(depth + 1);
        return Term::pair(std::move(l), std::move(r));
      }
      case TermKind::key: {
        std::size_t at = pos_;
        std::uint8_t kt = byte();
        if (kt > 4) throw DecodeError(at, "invalid key type byte");
        return Term::key(static_cast<KeyType>(kt), term(depth + 1));
      }
      case TermKind::seal: {
        std::size_t at = pos_;
        Term k = term(depth + 1);
        if (!k.is(TermKind::key)) throw DecodeError(at, "seal key is not a key term");
        Term p = term(depth + 1);
        return Term::sealed(std::move(k), std::move(p));
      }
      case TermKind::exp: {
        std::size_t at = pos_;
        Term base = term(depth + 1);
        if (base.is(TermKind::exp)) throw DecodeError(at, "DH base is itself a DH term");
        std::size_t count_at = pos_;
        std::uint32_t count = u32();
        if (count == 0) throw DecodeError(count_at, "empty exponent multiset");
        std::vector<Term> es;
        for (std::uint32_t i = 0; i < count; ++i) {
          std::size_t e_at = pos_;
          es.push_back(term(depth + 1));
          if (i > 0 && es[i] < es[i - 1]) throw DecodeError(e_at, "exponents not in canonical order");
        }
        return Term::exp(std::move(base), std::move(es));
      }
      case TermKind::list: {
        std::uint32_t count = u32();
        std::vector<Term> items;
        for (std::uint32_t i = 0; i < count; ++i) items.push_back(term(depth + 1));
        return Term::list(std::move(items));
      }
    }
    throw DecodeError(start, "unknown constructor byte " + std::to_string(ctor));
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

Term canonical_decode(std::string_view bytes) { return Decoder(bytes).run(); }

Term canonical_decode(std::span<const std::uint8_t> bytes) {
  return canonical_decode(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

// --- Structure --------------------------------------------------------------------

namespace {
// Compound constructors store their operands contiguously.
std::span<const Term> direct_children(const Term& t) {
  switch (t.kind()) {
    case TermKind::pair: return std::span<const Term>(&t.left(), 2);
    case TermKind::key: return std::span<const Term>(&t.seed(), 1);
    case TermKind::seal: return std::span<const Term>(&t.seal_key(), 2);
    case TermKind::exp: return std::span<const Term>(&t.exp_base(), t.exponents().size() + 1);
    case TermKind::list: return t.items();
    default: return {};
  }
}
}  // namespace

bool is_subterm(const Term& t, const Term& container) {
  if (t == container) return true;
  if (t.encoding().size() >= container.encoding().size()) return false;
  for (const auto& c : direct_children(container)) {
    if (is_subterm(t, c)) return true;
  }
  return false;
}

std::vector<Term> subterms(const Term& t) {
  std::vector<Term> out;
  std::unordered_set<Term, TermHash> seen;
  std::vector<Term> stack{t};
  while (!stack.empty()) {
    Term cur = std::move(stack.back());
    stack.pop_back();
    if (!seen.insert(cur).second) continue;
    out.push_back(cur);
    for (const auto& c : direct_children(cur)) stack.push_back(c);
  }
  return out;
}

std::optional<Bindings> match_pattern(std::span<const PatternItem> pattern, const Term& t) {
  if (!t.is(TermKind::list)) return std::nullopt;
  auto items = t.items();
  if (items.size() != pattern.size()) return std::nullopt;
  Bindings out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const Term& item = items[i];
    bool ok = std::visit(
        [&](const auto& p) -> bool {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, Exact>) {
            return item == p.value;
          } else if constexpr (std::is_same_v<P, TagLit>) {
            return item.is(TermKind::tag) && item.tag_name() == p.name;
          } else {
            auto [it, inserted] = out.emplace(p.name, item);
            return inserted || it->second == item;
          }
        },
        pattern[i]);
    if (!ok) return std::nullopt;
  }
  return out;
}

std::vector<Term> substitute(std::span<const PatternItem> pattern, const Bindings& bindings) {
  std::vector<Term> out;
  out.reserve(pattern.size());
  for (const auto& p : pattern) {
    if (const auto* e = std::get_if<Exact>(&p)) {
      out.push_back(e->value);
    } else if (const auto* tl = std::get_if<TagLit>(&p)) {
      out.push_back(Term::tag(tl->name));
    } else {
      out.push_back(bindings.at(std::get<Bind>(p).name));
    }
  }
  return out;
}

}  // namespace dyrun
