#include "corps/parser.hpp"

#include <cctype>
#include <set>
#include <sstream>

namespace corps {

ParseError::ParseError(std::string message, SourceSpan span, std::vector<std::string> expected)
    : std::runtime_error([&] {
        std::string what = message;
        if (!expected.empty()) {
          what += " (expected ";
          for (std::size_t i = 0; i < expected.size(); ++i) {
            if (i) what += i + 1 == expected.size() ? " or " : ", ";
            what += expected[i];
          }
          what += ")";
        }
        return what;
      }()),
      message_(std::move(message)),
      span_(span),
      expected_(std::move(expected)) {}

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

namespace {

enum class Tok {
  Ident,
  AgentName,
  String,
  Keyword,
  Punct,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  SourceSpan span;
};

const std::set<std::string, std::less<>> kKeywords = {
    "topology", "input", "def", "main", "let",  "in",     "send",  "to",   "up",   "down", "fun",
    "fst",      "snd",   "inl", "inr",  "case", "of",     "absurd", "unit", "void", "true", "false",
};

const std::set<std::string, std::less<>> kLocalKeywords = {"send_to", "recv_from", "skip"};

class Lexer {
 public:
  Lexer(std::string_view text, bool local) : text_(text), local_(local) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) {
        out.push_back({Tok::End, "end of input", {pos_, pos_}});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        return;
      }
    }
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
  }

  Token next() {
    std::size_t start = pos_;
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
      std::string word(text_.substr(start, pos_ - start));
      SourceSpan span{start, pos_};
      if (std::isupper(static_cast<unsigned char>(c))) return {Tok::AgentName, word, span};
      if (kKeywords.count(word) || (local_ && kLocalKeywords.count(word))) return {Tok::Keyword, word, span};
      return {Tok::Ident, word, span};
    }
    if (c == '"') {
      ++pos_;
      std::string value;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
        value += text_[pos_++];
      }
      if (pos_ >= text_.size()) throw ParseError("unterminated string literal", {start, pos_});
      ++pos_;
      return {Tok::String, value, {start, pos_}};
    }
    if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
      pos_ += 2;
      return {Tok::Punct, "->", {start, pos_}};
    }
    static const std::string_view kSingles = ";:=[].(),+*|";
    if (kSingles.find(c) != std::string_view::npos) {
      ++pos_;
      return {Tok::Punct, std::string(1, c), {start, pos_}};
    }
    throw ParseError(std::string("unexpected character '") + c + "'", {start, start + 1});
  }

  std::string_view text_;
  bool local_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  Parser(std::string_view text, bool local) : local_(local), toks_(Lexer(text, local).run()) {}

  Program program() {
    Program p;
    if (is_kw("topology")) {
      advance();
      if (peek().kind == Tok::Ident || peek().kind == Tok::String) {
        p.topology_ref = advance().text;
      } else {
        fail({"topology name", "string"});
      }
      expect(";");
    }
    while (is_kw("input")) {
      auto start = advance().span.begin;
      InputDecl in;
      in.name = ident();
      expect(":");
      in.type = type();
      in.span = {start, expect(";").span.end};
      declare(in.name, in.span);
      p.inputs.push_back(std::move(in));
    }
    while (is_kw("def")) {
      auto start = advance().span.begin;
      Definition d;
      d.name = ident();
      expect(":");
      d.type = type();
      expect("=");
      d.body = expr();
      d.span = {start, expect(";").span.end};
      declare(d.name, d.span);
      p.defs.push_back(std::move(d));
    }
    if (!is_kw("main")) fail(p.defs.empty() && p.inputs.empty() ? std::vector<std::string>{"topology", "input", "def", "main"}
                                                              : std::vector<std::string>{"def", "main"});
    auto start = advance().span.begin;
    expect(":");
    p.main_type = type();
    expect("=");
    p.main = expr();
    p.main_span = {start, expect(";").span.end};
    expect_end();
    return p;
  }

  void declare(const std::string& name, SourceSpan span) {
    if (!declared_.insert(name).second) throw ParseError("'" + name + "' is declared twice", span);
  }

  ExprPtr whole_expr() {
    auto e = expr();
    expect_end();
    return e;
  }

  TypePtr whole_type() {
    auto t = type();
    expect_end();
    return t;
  }

  Path whole_path() {
    auto g = path();
    expect_end();
    return g;
  }

 private:
  // -- token helpers -------------------------------------------------------

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& advance() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool is_kw(std::string_view kw, std::size_t k = 0) const {
    return peek(k).kind == Tok::Keyword && peek(k).text == kw;
  }
  bool is_punct(std::string_view p, std::size_t k = 0) const {
    return peek(k).kind == Tok::Punct && peek(k).text == p;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    const auto& t = peek();
    std::string what = t.kind == Tok::End ? "unexpected end of input" : "unexpected '" + t.text + "'";
    throw ParseError(what, t.span, std::move(expected));
  }

  const Token& expect(std::string_view p) {
    if (!is_punct(p) && !is_kw(p)) fail({"'" + std::string(p) + "'"});
    return advance();
  }

  void expect_end() {
    if (peek().kind != Tok::End) fail({"end of input"});
  }

  std::string ident() {
    if (peek().kind != Tok::Ident) fail({"identifier"});
    return advance().text;
  }

  // -- paths and types -----------------------------------------------------

  Path path() {
    expect("[");
    std::vector<Agent> segs;
    if (!is_punct("]")) {
      for (;;) {
        if (peek().kind != Tok::AgentName) fail({"agent name"});
        segs.push_back(advance().text);
        if (!is_punct(".")) break;
        advance();
      }
    }
    expect("]");
    return Path(std::move(segs));
  }

  TypePtr type() {
    auto lhs = sum_type();
    if (is_punct("->")) {
      advance();
      return ty::arrow(lhs, type());
    }
    return lhs;
  }

  TypePtr sum_type() {
    auto t = product_type();
    while (is_punct("+")) {
      advance();
      t = ty::sum(t, product_type());
    }
    return t;
  }

  TypePtr product_type() {
    auto t = modal_type();
    while (is_punct("*")) {
      advance();
      t = ty::product(t, modal_type());
    }
    return t;
  }

  TypePtr modal_type() {
    if (is_punct("[")) {
      auto g = path();
      return ty::stack(g, modal_type());
    }
    if (is_kw("unit")) {
      advance();
      return ty::unit();
    }
    if (is_kw("void")) {
      advance();
      return ty::void_();
    }
    if (is_punct("(")) {
      advance();
      auto t = type();
      expect(")");
      return t;
    }
    fail({"type"});
  }

  // -- expressions ---------------------------------------------------------

  std::size_t last_end() const { return pos_ == 0 ? 0 : toks_[pos_ - 1].span.end; }

  ExprPtr expr() {
    auto e = nonseq();
    if (local_ && is_punct(";")) {
      advance();
      auto rest = expr();
      return mk::seq(e, rest, {e->span.begin, rest->span.end});
    }
    return e;
  }

  ExprPtr nonseq() {
    std::size_t start = peek().span.begin;
    if (is_kw("fun")) {
      advance();
      auto x = ident();
      expect("->");
      auto body = expr();
      return mk::lam(x, body, {start, last_end()});
    }
    if (is_kw("let")) {
      advance();
      auto g1 = path();
      auto g2 = path();
      auto x = ident();
      expect("=");
      auto bound = expr();
      expect("in");
      auto body = expr();
      return mk::modal_let(g1, g2, x, bound, body, {start, last_end()});
    }
    if (is_kw("case")) {
      advance();
      auto scrut = expr();
      expect("of");
      expect("inl");
      auto xl = ident();
      expect("->");
      auto el = expr();
      expect("|");
      expect("inr");
      auto xr = ident();
      expect("->");
      auto er = expr();
      return mk::case_(scrut, xl, el, xr, er, {start, last_end()});
    }
    return application();
  }

  bool starts_unary() const {
    const auto& t = peek();
    switch (t.kind) {
      case Tok::Ident:
      case Tok::AgentName:
        return true;
      case Tok::Keyword:
        return t.text == "inl" || t.text == "inr" || t.text == "fst" || t.text == "snd" || t.text == "absurd" ||
               t.text == "send" || t.text == "up" || t.text == "down" || t.text == "send_to" ||
               t.text == "recv_from" || t.text == "skip";
      case Tok::Punct:
        return t.text == "(";
      default:
        return false;
    }
  }

  ExprPtr application() {
    if (!starts_unary()) fail({"expression"});
    auto e = unary();
    while (starts_unary()) {
      auto arg = unary();
      e = mk::app(e, arg, {e->span.begin, arg->span.end});
    }
    return e;
  }

  ExprPtr unary() {
    std::size_t start = peek().span.begin;
    const auto& t = peek();
    if (t.kind == Tok::Keyword) {
      const std::string word = t.text;
      if (word == "inl" || word == "inr" || word == "fst" || word == "snd" || word == "absurd") {
        advance();
        auto inner = unary();
        SourceSpan s{start, inner->span.end};
        if (word == "inl") return mk::inl(inner, s);
        if (word == "inr") return mk::inr(inner, s);
        if (word == "fst") return mk::fst(inner, s);
        if (word == "snd") return mk::snd(inner, s);
        return mk::absurd(inner, s);
      }
      if (word == "send") {
        advance();
        auto payload = unary();
        expect("to");
        auto dest = path();
        return mk::send(payload, dest, {start, last_end()});
      }
      if (word == "up" || word == "down") {
        advance();
        auto g = path();
        auto inner = unary();
        SourceSpan s{start, inner->span.end};
        return word == "up" ? mk::up(g, inner, s) : mk::down(g, inner, s);
      }
      if (word == "send_to") {
        advance();
        auto dest = path();
        auto inner = unary();
        return mk::send_to(dest, inner, {start, inner->span.end});
      }
      if (word == "recv_from") {
        advance();
        auto src = path();
        return mk::recv_from(src, {start, last_end()});
      }
      if (word == "skip") {
        advance();
        return mk::skip({start, last_end()});
      }
    }
    if (t.kind == Tok::AgentName) {
      Agent a = advance().text;
      expect(".");
      auto inner = unary();
      return mk::located(a, inner, {start, inner->span.end});
    }
    return atom();
  }

  ExprPtr atom() {
    std::size_t start = peek().span.begin;
    if (peek().kind == Tok::Ident) {
      auto name = advance().text;
      return mk::var(name, {start, last_end()});
    }
    if (is_punct("(")) {
      advance();
      if (is_punct(")")) {
        advance();
        return mk::unit({start, last_end()});
      }
      auto e = expr();
      if (is_punct(",")) {
        advance();
        auto r = expr();
        expect(")");
        return mk::pair(e, r, {start, last_end()});
      }
      if (is_punct(":")) {
        advance();
        auto t = type();
        expect(")");
        return mk::annot(e, t, {start, last_end()});
      }
      expect(")");
      return e;
    }
    fail({"expression"});
  }

  bool local_;
  std::set<std::string> declared_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Printing

enum Level {
  kExpr = 0,     // anything, including trailing open-ended forms
  kClosed = 1,   // no trailing fun/let/case/seq
  kApp = 2,      // application chain
  kUnary = 3,    // prefix operators
  kAtom = 4,
};

// Forms whose last subterm extends to the right as far as possible.
bool open_ended(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Lam:
    case ExprKind::ModalLet:
    case ExprKind::Case:
    case ExprKind::Seq:
      return true;
    default:
      return false;
  }
}

int level_of(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Lam:
    case ExprKind::ModalLet:
    case ExprKind::Case:
    case ExprKind::Seq:
      return kExpr;
    case ExprKind::App:
      return kApp;
    case ExprKind::Located:
    case ExprKind::Send:
    case ExprKind::Up:
    case ExprKind::Down:
    case ExprKind::Fst:
    case ExprKind::Snd:
    case ExprKind::Inl:
    case ExprKind::Inr:
    case ExprKind::Absurd:
    case ExprKind::SendTo:
    case ExprKind::RecvFrom:
      return kUnary;
    default:
      return kAtom;
  }
}

void print(std::ostream& os, const ExprPtr& e, int need);

void print_at(std::ostream& os, const ExprPtr& e, int need) {
  bool parens = level_of(e) < need || (need == kClosed && open_ended(e));
  if (parens) os << '(';
  print(os, e, parens ? kExpr : need);
  if (parens) os << ')';
}

void print(std::ostream& os, const ExprPtr& e, int need) {
  (void)need;
  switch (e->kind) {
    case ExprKind::Var:
      os << e->name;
      return;
    case ExprKind::Unit:
      os << "()";
      return;
    case ExprKind::Skip:
      os << "skip";
      return;
    case ExprKind::Located:
      os << e->agent << '.';
      print_at(os, e->kid(0), kUnary);
      return;
    case ExprKind::ModalLet:
      os << "let " << e->path.str() << ' ' << e->path2.str() << ' ' << e->name << " = ";
      print_at(os, e->kid(0), kExpr);
      os << " in ";
      print_at(os, e->kid(1), kExpr);
      return;
    case ExprKind::Send:
      os << "send ";
      print_at(os, e->kid(0), kUnary);
      os << " to " << e->path.str();
      return;
    case ExprKind::Up:
    case ExprKind::Down:
      os << (e->kind == ExprKind::Up ? "up " : "down ") << e->path.str() << ' ';
      print_at(os, e->kid(0), kUnary);
      return;
    case ExprKind::Lam:
      os << "fun " << e->name << " -> ";
      print_at(os, e->kid(0), kExpr);
      return;
    case ExprKind::App:
      print_at(os, e->kid(0), kApp);
      os << ' ';
      print_at(os, e->kid(1), kAtom);
      return;
    case ExprKind::Pair:
      os << '(';
      print_at(os, e->kid(0), kExpr);
      os << ", ";
      print_at(os, e->kid(1), kExpr);
      os << ')';
      return;
    case ExprKind::Fst:
    case ExprKind::Snd:
    case ExprKind::Inl:
    case ExprKind::Inr:
    case ExprKind::Absurd: {
      static const char* names[] = {"fst ", "snd ", "inl ", "inr ", "absurd "};
      int idx = e->kind == ExprKind::Fst   ? 0
                : e->kind == ExprKind::Snd ? 1
                : e->kind == ExprKind::Inl ? 2
                : e->kind == ExprKind::Inr ? 3
                                           : 4;
      os << names[idx];
      print_at(os, e->kid(0), kUnary);
      return;
    }
    case ExprKind::Case:
      os << "case ";
      print_at(os, e->kid(0), kExpr);
      os << " of inl " << e->name << " -> ";
      // A nested case in the left arm would capture the `|`.
      print_at(os, e->kid(1), e->kid(1)->kind == ExprKind::Case ? kClosed : kExpr);
      os << " | inr " << e->name2 << " -> ";
      print_at(os, e->kid(2), kExpr);
      return;
    case ExprKind::Annot:
      os << '(';
      print_at(os, e->kid(0), kExpr);
      os << " : " << print_type(e->type) << ')';
      return;
    case ExprKind::SendTo:
      os << "send_to " << e->path.str() << ' ';
      print_at(os, e->kid(0), kUnary);
      return;
    case ExprKind::RecvFrom:
      os << "recv_from " << e->path.str();
      return;
    case ExprKind::Seq:
      print_at(os, e->kid(0), kClosed);
      os << " ; ";
      print_at(os, e->kid(1), kExpr);
      return;
  }
}

// Type precedence: arrow 0, sum 1, product 2, modal/atom 3.
int type_level(const TypePtr& t) {
  switch (t->kind) {
    case TypeKind::Arrow: return 0;
    case TypeKind::Sum: return 1;
    case TypeKind::Product: return 2;
    default: return 3;
  }
}

void print_type_at(std::ostream& os, const TypePtr& t, int need) {
  bool parens = type_level(t) < need;
  if (parens) os << '(';
  switch (t->kind) {
    case TypeKind::Unit:
      os << "unit";
      break;
    case TypeKind::Void:
      os << "void";
      break;
    case TypeKind::Believes: {
      Path g = modality_prefix(t);
      auto body = *peel_stack(g, t);
      os << g.str() << ' ';
      print_type_at(os, body, 3);
      break;
    }
    case TypeKind::Arrow:
      print_type_at(os, t->left, 1);
      os << " -> ";
      print_type_at(os, t->right, 0);
      break;
    case TypeKind::Sum:
      print_type_at(os, t->left, 1);
      os << " + ";
      print_type_at(os, t->right, 2);
      break;
    case TypeKind::Product:
      print_type_at(os, t->left, 2);
      os << " * ";
      print_type_at(os, t->right, 3);
      break;
  }
  if (parens) os << ')';
}

bool is_identifier(const std::string& s) {
  if (s.empty() || !(std::islower(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'')) return false;
  return !kKeywords.count(s);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Program parse_program(std::string_view text) { return Parser(text, false).program(); }
ExprPtr parse_expr(std::string_view text) { return Parser(text, false).whole_expr(); }
TypePtr parse_type(std::string_view text) { return Parser(text, false).whole_type(); }
Path parse_path(std::string_view text) { return Parser(text, false).whole_path(); }
ExprPtr parse_local_expr(std::string_view text) { return Parser(text, true).whole_expr(); }

std::string print_type(const TypePtr& t) {
  std::ostringstream os;
  print_type_at(os, t, 0);
  return os.str();
}

std::string print_expr(const ExprPtr& e) {
  std::ostringstream os;
  print_at(os, e, kExpr);
  return os.str();
}

std::string pretty_print(const Program& p) {
  std::ostringstream os;
  if (p.topology_ref) os << "topology " << (is_identifier(*p.topology_ref) ? *p.topology_ref : quote(*p.topology_ref)) << ";\n";
  for (const auto& in : p.inputs) os << "input " << in.name << " : " << print_type(in.type) << ";\n";
  for (const auto& d : p.defs) os << "def " << d.name << " : " << print_type(d.type) << " = " << print_expr(d.body) << ";\n";
  os << "main : " << print_type(p.main_type) << " = " << print_expr(p.main) << ";\n";
  return os.str();
}

bool program_equal(const Program& a, const Program& b) {
  if (a.topology_ref != b.topology_ref) return false;
  if (a.inputs.size() != b.inputs.size() || a.defs.size() != b.defs.size()) return false;
  for (std::size_t i = 0; i < a.inputs.size(); ++i)
    if (a.inputs[i].name != b.inputs[i].name || !type_equal(a.inputs[i].type, b.inputs[i].type)) return false;
  for (std::size_t i = 0; i < a.defs.size(); ++i)
    if (a.defs[i].name != b.defs[i].name || !type_equal(a.defs[i].type, b.defs[i].type) ||
        !expr_equal(a.defs[i].body, b.defs[i].body))
      return false;
  return type_equal(a.main_type, b.main_type) && expr_equal(a.main, b.main);
}

}  // namespace corps
