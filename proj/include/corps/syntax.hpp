#pragma once

// Abstract syntax for Corps: agent paths, types, terms and typing contexts.

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace corps {

using Agent = std::string;

/// A generalized agent: a finite path of agents addressing a node of the
/// process tree. The empty path is the root.
class Path {
 public:
  Path() = default;
  explicit Path(std::vector<Agent> segments) : segments_(std::move(segments)) {}
  Path(std::initializer_list<Agent> segments) : segments_(segments) {}

  const std::vector<Agent>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }
  std::size_t size() const { return segments_.size(); }
  const Agent& operator[](std::size_t i) const { return segments_[i]; }
  const Agent& back() const { return segments_.back(); }

  Path snoc(const Agent& a) const;
  Path prefix(std::size_t n) const;
  Path suffix_from(std::size_t n) const;
  bool is_prefix_of(const Path& other) const;

  /// Dot-joined in brackets: `[A.B]`, root is `[]`.
  std::string str() const;
  /// Dot-joined without brackets (root is the empty string).
  std::string dotted() const;

  auto operator<=>(const Path&) const = default;
  bool operator==(const Path&) const = default;

 private:
  std::vector<Agent> segments_;
};

Path path_concat(const Path& g1, const Path& g2);
inline Path operator+(const Path& a, const Path& b) { return path_concat(a, b); }

// ---------------------------------------------------------------------------
// Types

enum class TypeKind { Unit, Void, Believes, Product, Sum, Arrow };

struct Type;
using TypePtr = std::shared_ptr<const Type>;

struct Type {
  TypeKind kind;
  Agent agent;   // Believes
  TypePtr left;  // Believes body, Product/Sum/Arrow left operand
  TypePtr right;
};

namespace ty {
TypePtr unit();
TypePtr void_();
TypePtr believes(const Agent& a, TypePtr body);
TypePtr product(TypePtr l, TypePtr r);
TypePtr sum(TypePtr l, TypePtr r);
TypePtr arrow(TypePtr dom, TypePtr cod);
/// Wraps `body` in one Believes layer per segment of `g`, outermost first.
TypePtr stack(const Path& g, TypePtr body);
}  // namespace ty

bool type_equal(const TypePtr& a, const TypePtr& b);

/// If `t` is the `g`-stack over some body, returns the body.
std::optional<TypePtr> peel_stack(const Path& g, const TypePtr& t);

/// The maximal Believes prefix of `t`, as a path.
Path modality_prefix(const TypePtr& t);

/// True iff `t` mentions no arrow.
bool is_positive_type(const TypePtr& t);

// ---------------------------------------------------------------------------
// Terms

struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

enum class ExprKind {
  Var,
  Located,
  ModalLet,
  Send,
  Up,
  Down,
  Lam,
  App,
  Pair,
  Fst,
  Snd,
  Inl,
  Inr,
  Case,
  Unit,
  Absurd,
  Annot,
  // Local process forms produced by endpoint projection.
  SendTo,
  RecvFrom,
  Seq,
  Skip,
};

const char* kind_name(ExprKind k);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Children layout by kind:
//   Located [body]          ModalLet [bound, body]    Send/Up/Down [body]
//   Lam [body]              App [fn, arg]             Pair [l, r]
//   Fst/Snd/Inl/Inr/Absurd/Annot [e]                  Case [scrut, left, right]
//   SendTo [payload]        Seq [first, second]
struct Expr {
  ExprKind kind;
  std::string name;   // Var; binder of Lam, ModalLet, left arm of Case
  std::string name2;  // right arm binder of Case
  Agent agent;        // Located
  Path path;          // ModalLet g1; destination/path of Send, Up, Down, SendTo, RecvFrom
  Path path2;         // ModalLet g2
  std::vector<ExprPtr> kids;
  TypePtr type;  // Annot
  SourceSpan span;

  const ExprPtr& kid(std::size_t i) const { return kids[i]; }
};

namespace mk {
ExprPtr var(std::string x, SourceSpan s = {});
ExprPtr located(Agent a, ExprPtr body, SourceSpan s = {});
ExprPtr modal_let(Path g1, Path g2, std::string x, ExprPtr bound, ExprPtr body, SourceSpan s = {});
ExprPtr send(ExprPtr payload, Path dest, SourceSpan s = {});
ExprPtr up(Path g, ExprPtr body, SourceSpan s = {});
ExprPtr down(Path g, ExprPtr body, SourceSpan s = {});
ExprPtr lam(std::string x, ExprPtr body, SourceSpan s = {});
ExprPtr app(ExprPtr f, ExprPtr a, SourceSpan s = {});
ExprPtr pair(ExprPtr l, ExprPtr r, SourceSpan s = {});
ExprPtr fst(ExprPtr e, SourceSpan s = {});
ExprPtr snd(ExprPtr e, SourceSpan s = {});
ExprPtr inl(ExprPtr e, SourceSpan s = {});
ExprPtr inr(ExprPtr e, SourceSpan s = {});
ExprPtr case_(ExprPtr scrut, std::string xl, ExprPtr el, std::string xr, ExprPtr er, SourceSpan s = {});
ExprPtr unit(SourceSpan s = {});
ExprPtr absurd(ExprPtr e, SourceSpan s = {});
ExprPtr annot(ExprPtr e, TypePtr t, SourceSpan s = {});
ExprPtr send_to(Path dest, ExprPtr payload, SourceSpan s = {});
ExprPtr recv_from(Path src, SourceSpan s = {});
ExprPtr seq(ExprPtr first, ExprPtr second, SourceSpan s = {});
ExprPtr skip(SourceSpan s = {});
}  // namespace mk

/// Same node with children replaced.
ExprPtr with_kids(const ExprPtr& e, std::vector<ExprPtr> kids);

std::set<std::string> free_vars(const ExprPtr& e);
bool occurs_free(const std::string& x, const ExprPtr& e);

/// Capture-avoiding substitution e[x := v].
ExprPtr substitute(const ExprPtr& e, const std::string& x, const ExprPtr& v);

/// Alpha-equivalence.
bool expr_equal(const ExprPtr& a, const ExprPtr& b);

std::string fresh_name(const std::string& base, const std::set<std::string>& avoid);

/// Removes every Annot node.
ExprPtr erase_annotations(const ExprPtr& e);

// ---------------------------------------------------------------------------
// Typing contexts

struct Binding {
  std::string name;
  TypePtr type;
  Path tag;
};

struct Lock {
  Path path;
};

using ContextEntry = std::variant<Binding, Lock>;

struct TypingContext {
  std::vector<ContextEntry> entries;

  /// Appends a lock and restores canonical form.
  TypingContext with_lock(const Path& g) const;
  TypingContext with_binding(std::string x, TypePtr t, Path tag) const;
};

Path locks_of(const TypingContext& ctx);

/// Canonical form: drops empty locks and fuses adjacent locks.
TypingContext normalize_context(const TypingContext& ctx);

bool is_canonical(const TypingContext& ctx);

}  // namespace corps
