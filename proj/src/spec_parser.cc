#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <set>

#include <fmt/format.h>

#include "resilience/spec_lang.h"

namespace resilience {

namespace {

SpecPtr Make(SpecKind kind, int horizon, std::string atom,
             std::vector<SpecPtr> children, SourcePos pos) {
  auto node = std::make_shared<SpecNode>();
  node->kind = kind;
  node->horizon = horizon;
  node->atom = std::move(atom);
  node->children = std::move(children);
  node->pos = pos;
  return node;
}

void RequireHorizon(int k) {
  if (k < 0) throw std::invalid_argument("temporal horizon must be >= 0");
}

}  // namespace

SpecPtr SpecNode::True(SourcePos pos) {
  return Make(SpecKind::kTrue, 0, {}, {}, pos);
}
SpecPtr SpecNode::False(SourcePos pos) {
  return Make(SpecKind::kFalse, 0, {}, {}, pos);
}
SpecPtr SpecNode::Atom(std::string name, SourcePos pos) {
  return Make(SpecKind::kAtom, 0, std::move(name), {}, pos);
}
SpecPtr SpecNode::Not(SpecPtr child, SourcePos pos) {
  return Make(SpecKind::kNot, 0, {}, {std::move(child)}, pos);
}
SpecPtr SpecNode::And(std::vector<SpecPtr> children, SourcePos pos) {
  if (children.empty()) throw std::invalid_argument("And needs operands");
  if (children.size() == 1) return children.front();
  return Make(SpecKind::kAnd, 0, {}, std::move(children), pos);
}
SpecPtr SpecNode::Or(std::vector<SpecPtr> children, SourcePos pos) {
  if (children.empty()) throw std::invalid_argument("Or needs operands");
  if (children.size() == 1) return children.front();
  return Make(SpecKind::kOr, 0, {}, std::move(children), pos);
}
SpecPtr SpecNode::Next(int k, SpecPtr child, SourcePos pos) {
  RequireHorizon(k);
  return Make(SpecKind::kNext, k, {}, {std::move(child)}, pos);
}
SpecPtr SpecNode::Eventually(int k, SpecPtr child, SourcePos pos) {
  RequireHorizon(k);
  return Make(SpecKind::kEventually, k, {}, {std::move(child)}, pos);
}
SpecPtr SpecNode::Always(int k, SpecPtr child, SourcePos pos) {
  RequireHorizon(k);
  return Make(SpecKind::kAlways, k, {}, {std::move(child)}, pos);
}
SpecPtr SpecNode::Until(int k, SpecPtr left, SpecPtr right, SourcePos pos) {
  RequireHorizon(k);
  return Make(SpecKind::kUntil, k, {}, {std::move(left), std::move(right)},
              pos);
}

bool SpecEqual(const SpecNode& a, const SpecNode& b) {
  if (a.kind != b.kind || a.horizon != b.horizon || a.atom != b.atom ||
      a.children.size() != b.children.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!SpecEqual(*a.children[i], *b.children[i])) return false;
  }
  return true;
}

SpecSyntaxError::SpecSyntaxError(const std::string& message, SourcePos pos)
    : std::runtime_error(
          fmt::format("{}:{}: {}", pos.line, pos.column, message)),
      pos_(pos) {}

namespace {

enum class Tok {
  kIdent,
  kInt,
  kLBracket,
  kRBracket,
  kLParen,
  kRParen,
  kComma,
  kAnd,
  kOr,
  kBang,
  kMinus,
  kEnd,
};

struct Token {
  Tok kind;
  std::string text;
  SourcePos pos;
};

std::string_view TokName(Tok t) {
  switch (t) {
    case Tok::kIdent: return "identifier";
    case Tok::kInt: return "integer";
    case Tok::kLBracket: return "'['";
    case Tok::kRBracket: return "']'";
    case Tok::kLParen: return "'('";
    case Tok::kRParen: return "')'";
    case Tok::kComma: return "','";
    case Tok::kAnd: return "'&&'";
    case Tok::kOr: return "'||'";
    case Tok::kBang: return "'!'";
    case Tok::kMinus: return "'-'";
    case Tok::kEnd: return "end of input";
  }
  return "?";
}

std::vector<Token> Lex(std::string_view text) {
  std::vector<Token> out;
  SourcePos pos;
  std::size_t i = 0;
  auto advance = [&](std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
      if (text[i] == '\n') {
        ++pos.line;
        pos.column = 1;
      } else {
        ++pos.column;
      }
      ++i;
    }
  };
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    const SourcePos start = pos;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[j])) ||
              text[j] == '_')) {
        ++j;
      }
      out.push_back({Tok::kIdent, std::string(text.substr(i, j - i)), start});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[j]))) {
        ++j;
      }
      out.push_back({Tok::kInt, std::string(text.substr(i, j - i)), start});
      advance(j - i);
      continue;
    }
    auto two = text.substr(i, 2);
    if (two == "&&") {
      out.push_back({Tok::kAnd, "&&", start});
      advance(2);
      continue;
    }
    if (two == "||") {
      out.push_back({Tok::kOr, "||", start});
      advance(2);
      continue;
    }
    Tok kind;
    switch (c) {
      case '[': kind = Tok::kLBracket; break;
      case ']': kind = Tok::kRBracket; break;
      case '(': kind = Tok::kLParen; break;
      case ')': kind = Tok::kRParen; break;
      case ',': kind = Tok::kComma; break;
      case '!': kind = Tok::kBang; break;
      case '-': kind = Tok::kMinus; break;
      default:
        throw SpecSyntaxError(fmt::format("unexpected character '{}'", c),
                              start);
    }
    out.push_back({kind, std::string(1, c), start});
    advance(1);
  }
  out.push_back({Tok::kEnd, "", pos});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, const SetTable* bindings)
      : tokens_(std::move(tokens)), bindings_(bindings) {}

  SpecPtr ParseAll() {
    SpecPtr spec = ParseOr();
    if (Peek().kind != Tok::kEnd) {
      throw SpecSyntaxError(
          fmt::format("unexpected {} after end of formula",
                      TokName(Peek().kind)),
          Peek().pos);
    }
    return spec;
  }

 private:
  const Token& Peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& Take() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }
  const Token& Expect(Tok kind) {
    if (Peek().kind != kind) {
      throw SpecSyntaxError(fmt::format("expected {}, found {}", TokName(kind),
                                        TokName(Peek().kind)),
                            Peek().pos);
    }
    return Take();
  }

  SpecPtr ParseOr() {
    const SourcePos at = Peek().pos;
    std::vector<SpecPtr> operands{ParseAnd()};
    while (Peek().kind == Tok::kOr) {
      Take();
      operands.push_back(ParseAnd());
    }
    return SpecNode::Or(std::move(operands), at);
  }

  SpecPtr ParseAnd() {
    const SourcePos at = Peek().pos;
    std::vector<SpecPtr> operands{ParseUnary()};
    while (Peek().kind == Tok::kAnd) {
      Take();
      operands.push_back(ParseUnary());
    }
    return SpecNode::And(std::move(operands), at);
  }

  // "[" INT "]"
  int ParseHorizon() {
    Expect(Tok::kLBracket);
    if (Peek().kind == Tok::kMinus) {
      throw SpecSyntaxError("negative horizon literal", Peek().pos);
    }
    const Token& lit = Expect(Tok::kInt);
    int value = 0;
    auto [ptr, ec] = std::from_chars(
        lit.text.data(), lit.text.data() + lit.text.size(), value);
    if (ec != std::errc() || ptr != lit.text.data() + lit.text.size()) {
      throw SpecSyntaxError("horizon literal out of range", lit.pos);
    }
    Expect(Tok::kRBracket);
    return value;
  }

  SpecPtr ParseUnary() {
    const Token& t = Peek();
    switch (t.kind) {
      case Tok::kBang: {
        Take();
        return SpecNode::Not(ParseUnary(), t.pos);
      }
      case Tok::kLParen: {
        Take();
        SpecPtr inner = ParseOr();
        Expect(Tok::kRParen);
        return inner;
      }
      case Tok::kIdent:
        break;
      default:
        throw SpecSyntaxError(
            fmt::format("expected a formula, found {}", TokName(t.kind)),
            t.pos);
    }
    const SourcePos at = t.pos;
    const bool op_follows = Peek(1).kind == Tok::kLBracket;
    if (op_follows && t.text.size() == 1) {
      switch (t.text[0]) {
        case 'X': {
          Take();
          int k = ParseHorizon();
          return SpecNode::Next(k, ParseUnary(), at);
        }
        case 'F': {
          Take();
          int k = ParseHorizon();
          return SpecNode::Eventually(k, ParseUnary(), at);
        }
        case 'G': {
          Take();
          int k = ParseHorizon();
          return SpecNode::Always(k, ParseUnary(), at);
        }
        case 'U': {
          Take();
          int k = ParseHorizon();
          Expect(Tok::kLParen);
          SpecPtr left = ParseOr();
          Expect(Tok::kComma);
          SpecPtr right = ParseOr();
          Expect(Tok::kRParen);
          return SpecNode::Until(k, std::move(left), std::move(right), at);
        }
        default:
          break;
      }
    }
    Take();
    if (t.text == "true") return SpecNode::True(at);
    if (t.text == "false") return SpecNode::False(at);
    if (bindings_ != nullptr && bindings_->find(t.text) == bindings_->end()) {
      throw SpecSyntaxError(fmt::format("unbound atom '{}'", t.text), at);
    }
    return SpecNode::Atom(t.text, at);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const SetTable* bindings_;
};

bool IsBinary(const SpecNode& node) {
  return node.kind == SpecKind::kAnd || node.kind == SpecKind::kOr;
}

void Print(const SpecNode& node, std::string& out);

void PrintOperand(const SpecNode& node, std::string& out) {
  if (IsBinary(node)) {
    out += '(';
    Print(node, out);
    out += ')';
  } else {
    Print(node, out);
  }
}

void Print(const SpecNode& node, std::string& out) {
  switch (node.kind) {
    case SpecKind::kTrue: out += "true"; return;
    case SpecKind::kFalse: out += "false"; return;
    case SpecKind::kAtom: out += node.atom; return;
    case SpecKind::kNot:
      out += '!';
      PrintOperand(*node.children[0], out);
      return;
    case SpecKind::kAnd:
    case SpecKind::kOr: {
      const char* sep = node.kind == SpecKind::kAnd ? " && " : " || ";
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i > 0) out += sep;
        PrintOperand(*node.children[i], out);
      }
      return;
    }
    case SpecKind::kNext:
    case SpecKind::kEventually:
    case SpecKind::kAlways: {
      const char op = node.kind == SpecKind::kNext         ? 'X'
                      : node.kind == SpecKind::kEventually ? 'F'
                                                           : 'G';
      out += fmt::format("{}[{}] ", op, node.horizon);
      PrintOperand(*node.children[0], out);
      return;
    }
    case SpecKind::kUntil:
      out += fmt::format("U[{}](", node.horizon);
      Print(*node.children[0], out);
      out += ", ";
      Print(*node.children[1], out);
      out += ')';
      return;
  }
}

void CollectAtoms(const SpecNode& node, std::set<std::string>& names) {
  if (node.kind == SpecKind::kAtom) names.insert(node.atom);
  for (const auto& c : node.children) CollectAtoms(*c, names);
}

}  // namespace

SpecPtr ParseSpec(std::string_view text, const SetTable& bindings) {
  return Parser(Lex(text), &bindings).ParseAll();
}

SpecPtr ParseSpecUnbound(std::string_view text) {
  return Parser(Lex(text), nullptr).ParseAll();
}

std::string PrintSpec(const SpecNode& spec) {
  std::string out;
  Print(spec, out);
  return out;
}

int RequiredHorizon(const SpecNode& spec) {
  switch (spec.kind) {
    case SpecKind::kTrue:
    case SpecKind::kFalse:
    case SpecKind::kAtom:
      return 0;
    case SpecKind::kNot:
      return RequiredHorizon(*spec.children[0]);
    case SpecKind::kAnd:
    case SpecKind::kOr: {
      int h = 0;
      for (const auto& c : spec.children) h = std::max(h, RequiredHorizon(*c));
      return h;
    }
    case SpecKind::kNext:
    case SpecKind::kEventually:
    case SpecKind::kAlways:
      return spec.horizon + RequiredHorizon(*spec.children[0]);
    case SpecKind::kUntil: {
      int h = spec.horizon + RequiredHorizon(*spec.children[1]);
      if (spec.horizon >= 1) {
        h = std::max(h, spec.horizon - 1 + RequiredHorizon(*spec.children[0]));
      }
      return h;
    }
  }
  return 0;
}

std::vector<std::string> AtomNames(const SpecNode& spec) {
  std::set<std::string> names;
  CollectAtoms(spec, names);
  return {names.begin(), names.end()};
}

std::string SpecHash(const SpecNode& spec) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : PrintSpec(spec)) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", hash);
}

}  // namespace resilience
