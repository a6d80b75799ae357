#pragma once

// Concrete syntax for Corps programs, and the pretty-printer that inverts it.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "corps/syntax.hpp"

namespace corps {

struct InputDecl {
  std::string name;
  TypePtr type;
  SourceSpan span;
};

struct Definition {
  std::string name;
  TypePtr type;
  ExprPtr body;
  SourceSpan span;
};

struct Program {
  std::optional<std::string> topology_ref;  // preset name or file path
  std::vector<InputDecl> inputs;
  std::vector<Definition> defs;
  TypePtr main_type;
  ExprPtr main;
  SourceSpan main_span;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, SourceSpan span, std::vector<std::string> expected = {});

  const std::string& message() const { return message_; }
  SourceSpan span() const { return span_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::string message_;
  SourceSpan span_;
  std::vector<std::string> expected_;
};

Program parse_program(std::string_view text);
ExprPtr parse_expr(std::string_view text);
TypePtr parse_type(std::string_view text);
Path parse_path(std::string_view text);

/// Local process syntax: the expression grammar plus `send_to [g] e`,
/// `recv_from [g]`, `skip` and `e ; e`.
ExprPtr parse_local_expr(std::string_view text);

std::string print_type(const TypePtr& t);
std::string print_expr(const ExprPtr& e);
std::string pretty_print(const Program& p);

bool program_equal(const Program& a, const Program& b);

/// 1-based line and column of a byte offset.
std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t offset);

}  // namespace corps
