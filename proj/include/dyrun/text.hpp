#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dyrun/term.hpp"

namespace dyrun {

// Text syntax used by the CLI, trace files and tests:
//
//   7  -3  "m1"  nonce#5  [t1 t2 t3]  (pair t1 t2)  (key aenc t)  (seal k t)
//   (exp g [a b])

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t position, const std::string& what);
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

std::string to_text(const Term& t);

/// Parses exactly one term; surrounding whitespace is allowed.
Term parse_term(std::string_view text);

}  // namespace dyrun
