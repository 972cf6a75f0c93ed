#pragma once

// Symbolic state language: symbols, atoms, literals, conjunctions and the
// parameterized templates behaviors are written in.
//
// Text grammar (whitespace is insignificant between tokens):
//   literal     := ["!"] ident "(" [term ("," term)*] ")"
//   conjunction := literal ("&" literal)*
//   term        := ident | "?" ident          (variables only in templates)

#include <algorithm>
#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "tro/error.hpp"

namespace tro {

inline constexpr std::size_t kMaxSymbolLength = 64;
inline constexpr std::size_t kMaxArity = 4;

inline bool is_identifier(std::string_view s) {
  if (s.empty() || s.size() > kMaxSymbolLength) return false;
  if (s.front() < 'a' || s.front() > 'z') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

class Symbol {
 public:
  explicit Symbol(std::string_view name) : name_(name) {
    if (!is_identifier(name_)) throw InvalidValue("invalid symbol '" + name_ + "'");
  }

  const std::string& name() const noexcept { return name_; }

  friend auto operator<=>(const Symbol&, const Symbol&) = default;
  friend bool operator==(const Symbol&, const Symbol&) = default;

 private:
  std::string name_;
};

struct Atom {
  Symbol predicate;
  std::vector<Symbol> args;

  Atom(Symbol pred, std::vector<Symbol> a = {}) : predicate(std::move(pred)), args(std::move(a)) {
    if (args.size() > kMaxArity)
      throw ArityError("predicate " + predicate.name() + " exceeds maximum arity 4");
  }

  std::string str() const {
    std::string out = predicate.name() + "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) out += ',';
      out += args[i].name();
    }
    return out + ")";
  }

  friend auto operator<=>(const Atom&, const Atom&) = default;
  friend bool operator==(const Atom&, const Atom&) = default;
};

using AtomSet = std::set<Atom>;

struct Literal {
  Atom atom;
  bool positive = true;

  std::string str() const { return (positive ? "" : "!") + atom.str(); }

  friend auto operator<=>(const Literal&, const Literal&) = default;
  friend bool operator==(const Literal&, const Literal&) = default;
};

// Set of literals; an atom never appears with both polarities.
class Conjunction {
 public:
  Conjunction() = default;
  Conjunction(std::initializer_list<Literal> lits) {
    for (const auto& l : lits) add(l);
  }
  explicit Conjunction(const std::vector<Literal>& lits) {
    for (const auto& l : lits) add(l);
  }

  void add(const Literal& lit) {
    if (literals_.count(Literal{lit.atom, !lit.positive}))
      throw ContradictoryConjunction("atom " + lit.atom.str() + " appears with both polarities");
    literals_.insert(lit);
  }

  const std::set<Literal>& literals() const noexcept { return literals_; }
  bool empty() const noexcept { return literals_.empty(); }
  std::size_t size() const noexcept { return literals_.size(); }

  std::string str() const {
    std::string out;
    for (const auto& l : literals_) {
      if (!out.empty()) out += " & ";
      out += l.str();
    }
    return out;
  }

  friend bool operator==(const Conjunction&, const Conjunction&) = default;

 private:
  std::set<Literal> literals_;
};

// Closed world: absent atoms are false.
inline bool entails(const AtomSet& state, const Conjunction& condition) {
  for (const auto& lit : condition.literals()) {
    if (state.count(lit.atom) != static_cast<std::size_t>(lit.positive)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Templates

struct Variable {
  std::string name;  // without the leading '?'
  friend auto operator<=>(const Variable&, const Variable&) = default;
  friend bool operator==(const Variable&, const Variable&) = default;
};

using Term = std::variant<Symbol, Variable>;

inline std::string term_str(const Term& t) {
  if (const auto* s = std::get_if<Symbol>(&t)) return s->name();
  return "?" + std::get<Variable>(t).name;
}

using Substitution = std::map<std::string, Symbol>;

inline Symbol resolve_term(const Term& t, const Substitution& sub) {
  if (const auto* s = std::get_if<Symbol>(&t)) return *s;
  const auto& var = std::get<Variable>(t).name;
  auto it = sub.find(var);
  if (it == sub.end()) throw UnboundVariable(var);
  return it->second;
}

struct ParamAtom {
  Symbol predicate;
  std::vector<Term> args;

  std::string str() const {
    std::string out = predicate.name() + "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) out += ',';
      out += term_str(args[i]);
    }
    return out + ")";
  }

  friend bool operator==(const ParamAtom&, const ParamAtom&) = default;
};

struct ParamLiteral {
  ParamAtom atom;
  bool positive = true;
  std::string str() const { return (positive ? "" : "!") + atom.str(); }
  friend bool operator==(const ParamLiteral&, const ParamLiteral&) = default;
};

inline Atom ground(const ParamAtom& tmpl, const Substitution& sub) {
  std::vector<Symbol> args;
  args.reserve(tmpl.args.size());
  for (const auto& t : tmpl.args) args.push_back(resolve_term(t, sub));
  return Atom{tmpl.predicate, std::move(args)};
}

inline Literal ground(const ParamLiteral& tmpl, const Substitution& sub) {
  return Literal{ground(tmpl.atom, sub), tmpl.positive};
}

inline Conjunction ground(const std::vector<ParamLiteral>& tmpl, const Substitution& sub) {
  Conjunction out;
  for (const auto& l : tmpl) out.add(ground(l, sub));
  return out;
}

inline ParamAtom lift(const Atom& a) {
  ParamAtom out{a.predicate, {}};
  for (const auto& s : a.args) out.args.emplace_back(s);
  return out;
}

// Predicate arities, fixed at first sight.
class Signature {
 public:
  void check(const Symbol& predicate, std::size_t arity) {
    auto [it, inserted] = arity_.emplace(predicate.name(), arity);
    if (!inserted && it->second != arity)
      throw ArityError("predicate " + predicate.name() + " has arity " +
                       std::to_string(it->second) + ", used with " + std::to_string(arity));
  }
  void check(const Atom& a) { check(a.predicate, a.args.size()); }

 private:
  std::map<std::string, std::size_t> arity_;
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                   text_[pos_] == '\n' || text_[pos_] == '\r'))
      ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }
  bool consume(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }
  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }
  std::string ident() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && ((text_[pos_] >= 'a' && text_[pos_] <= 'z') ||
                                   (text_[pos_] >= '0' && text_[pos_] <= '9') ||
                                   text_[pos_] == '_'))
      ++pos_;
    std::string id(text_.substr(start, pos_ - start));
    if (id.empty()) {
      pos_ = start;
      fail("expected identifier");
    }
    if (!is_identifier(id)) {
      pos_ = start;
      fail("invalid identifier '" + id + "'");
    }
    return id;
  }
  Term term(bool allow_variables) {
    skip_ws();
    if (peek('?')) {
      if (!allow_variables) fail("variables are not allowed here");
      ++pos_;
      return Variable{ident()};
    }
    return Symbol(ident());
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw SyntaxError(what, pos_);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

inline ParamLiteral parse_param_literal(Cursor& cur, bool allow_variables) {
  const bool negated = cur.consume('!');
  ParamAtom atom{Symbol(cur.ident()), {}};
  cur.expect('(');
  if (!cur.consume(')')) {
    do {
      atom.args.push_back(cur.term(allow_variables));
    } while (cur.consume(','));
    cur.expect(')');
  }
  if (atom.args.size() > kMaxArity) throw ArityError("predicate " + atom.predicate.name() + " exceeds maximum arity 4");
  return ParamLiteral{std::move(atom), !negated};
}

inline Literal to_ground(const ParamLiteral& p) { return ground(p, {}); }

}  // namespace detail

inline ParamLiteral parse_param_literal(std::string_view text) {
  detail::Cursor cur(text);
  auto lit = detail::parse_param_literal(cur, true);
  if (!cur.at_end()) cur.fail("trailing input");
  return lit;
}

inline ParamAtom parse_param_atom(std::string_view text) {
  auto lit = parse_param_literal(text);
  if (!lit.positive) throw SyntaxError("negation not allowed in an atom", 0);
  return lit.atom;
}

inline Literal parse_literal(std::string_view text) {
  detail::Cursor cur(text);
  auto lit = detail::parse_param_literal(cur, false);
  if (!cur.at_end()) cur.fail("trailing input");
  return detail::to_ground(lit);
}

inline Literal parse_literal(std::string_view text, Signature& sig) {
  auto lit = parse_literal(text);
  sig.check(lit.atom);
  return lit;
}

inline Atom parse_atom(std::string_view text) {
  auto lit = parse_literal(text);
  if (!lit.positive) throw SyntaxError("negation not allowed in an atom", 0);
  return lit.atom;
}

inline Conjunction parse_conjunction(std::string_view text) {
  detail::Cursor cur(text);
  Conjunction out;
  if (cur.at_end()) return out;
  do {
    out.add(detail::to_ground(detail::parse_param_literal(cur, false)));
  } while (cur.consume('&'));
  if (!cur.at_end()) cur.fail("expected '&' or end of input");
  return out;
}

}  // namespace tro
