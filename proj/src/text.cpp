#include "dyrun/text.hpp"

#include <cctype>
#include <charconv>
#include <vector>

namespace dyrun {

ParseError::ParseError(std::size_t position, const std::string& what)
    : std::runtime_error("parse error at offset " + std::to_string(position) + ": " + what), position_(position) {}

namespace {

void print(const Term& t, std::string& out) {
  switch (t.kind()) {
    case TermKind::integer: out += std::to_string(t.int_value()); break;
    case TermKind::tag:
      out += '"';
      out += t.tag_name();
      out += '"';
      break;
    case TermKind::nonce:
      out += "nonce#";
      out += std::to_string(t.nonce_id());
      break;
    case TermKind::pair:
      out += "(pair ";
      print(t.left(), out);
      out += ' ';
      print(t.right(), out);
      out += ')';
      break;
    case TermKind::key:
      out += "(key ";
      out += to_string(t.key_type());
      out += ' ';
      print(t.seed(), out);
      out += ')';
      break;
    case TermKind::seal:
      out += "(seal ";
      print(t.seal_key(), out);
      out += ' ';
      print(t.payload(), out);
      out += ')';
      break;
    case TermKind::exp: {
      out += "(exp ";
      print(t.exp_base(), out);
      out += " [";
      bool first = true;
      for (const auto& e : t.exponents()) {
        if (!first) out += ' ';
        first = false;
        print(e, out);
      }
      out += "])";
      break;
    }
    case TermKind::list: {
      out += '[';
      bool first = true;
      for (const auto& e : t.items()) {
        if (!first) out += ' ';
        first = false;
        print(e, out);
      }
      out += ']';
      break;
    }
  }
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  Term parse_all() {
    Term t = term(0);
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(pos_, what); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool at_delim() const {
    if (pos_ >= s_.size()) return true;
    char c = s_[pos_];
    return std::isspace(static_cast<unsigned char>(c)) || c == ')' || c == ']' || c == '(' || c == '[';
  }

  std::string_view word() {
    std::size_t start = pos_;
    while (!at_delim()) ++pos_;
    return s_.substr(start, pos_ - start);
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::vector<Term> bracketed(std::size_t depth) {
    expect('[');
    std::vector<Term> items;
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated list");
      if (s_[pos_] == ']') {
        ++pos_;
        return items;
      }
      items.push_back(term(depth + 1));
    }
  }

  Term term(std::size_t depth) {
    if (depth > 1024) fail("nesting too deep");
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    std::size_t start = pos_;
    char c = s_[pos_];
    if (c == '"') {
      ++pos_;
      std::size_t end = s_.find('"', pos_);
      if (end == std::string_view::npos) fail("unterminated tag");
      std::string name(s_.substr(pos_, end - pos_));
      if (!is_valid_tag_name(name)) {
        pos_ = start;
        fail("invalid tag name");
      }
      pos_ = end + 1;
      return Term::tag(std::move(name));
    }
    if (c == '[') return Term::list(bracketed(depth));
    if (c == '(') {
      ++pos_;
      skip_ws();
      std::string_view head = word();
      Term result = compound(head, depth);
      expect(')');
      return result;
    }
    std::string_view w = word();
    if (w.empty()) fail("unexpected character");
    if (w.starts_with("nonce#")) {
      std::uint64_t id = 0;
      auto digits = w.substr(6);
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id);
      if (ec != std::errc() || p != digits.data() + digits.size() || digits.empty()) {
        pos_ = start;
        fail("invalid nonce id");
      }
      return Term::nonce(id);
    }
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || p != w.data() + w.size()) {
      pos_ = start;
      fail("invalid integer or unknown token '" + std::string(w) + "'");
    }
    return Term::integer(v);
  }

  Term compound(std::string_view head, std::size_t depth) {
    if (head == "pair") {
      Term l = term(depth + 1);
      Term r = term(depth + 1);
      return Term::pair(std::move(l), std::move(r));
    }
    if (head == "key") {
      skip_ws();
      std::size_t at = pos_;
      auto type = key_type_from_string(word());
      if (!type) {
        pos_ = at;
        fail("unknown key type");
      }
      return Term::key(*type, term(depth + 1));
    }
    if (head == "seal") {
      skip_ws();
      std::size_t at = pos_;
      Term k = term(depth + 1);
      if (!k.is(TermKind::key)) {
        pos_ = at;
        fail("seal key is not a key term");
      }
      return Term::sealed(std::move(k), term(depth + 1));
    }
    if (head == "exp") {
      Term base = term(depth + 1);
      skip_ws();
      std::size_t at = pos_;
      auto es = bracketed(depth);
      if (es.empty()) {
        pos_ = at;
        fail("empty exponent list");
      }
      return Term::exp(std::move(base), std::move(es));
    }
    fail("unknown constructor '" + std::string(head) + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_text(const Term& t) {
  std::string out;
  print(t, out);
  return out;
}

Term parse_term(std::string_view text) { return Parser(text).parse_all(); }

}  // namespace dyrun
