#include "pdmp/expr.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

namespace pdmp {

namespace {

constexpr int kMaxDepth = 200;

struct FuncInfo {
    std::string_view name;
    Func func;
    int arity;
};

constexpr std::array<FuncInfo, 7> kFuncs{{
    {"exp", Func::exp, 1},
    {"log", Func::log, 1},
    {"sqrt", Func::sqrt, 1},
    {"tanh", Func::tanh, 1},
    {"abs", Func::abs, 1},
    {"min", Func::min, 2},
    {"max", Func::max, 2},
}};

enum class Tok { number, name, plus, minus, star, slash, caret, lparen, rparen, comma, end };

struct Token {
    Tok kind = Tok::end;
    std::size_t offset = 0;
    std::string_view text;
    double number = 0.0;
};

bool is_name_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) { advance(); }

    ExprNode parse_all() {
        ExprNode e = parse_binary(0, 0);
        if (tok_.kind != Tok::end) {
            throw ParseError(tok_.offset, "expected operator or end of input");
        }
        return e;
    }

private:
    // Binding powers: + - (10), * / (20), unary minus (25), ^ (30, right).
    static int left_power(Tok t) {
        switch (t) {
            case Tok::plus:
            case Tok::minus: return 10;
            case Tok::star:
            case Tok::slash: return 20;
            case Tok::caret: return 30;
            default: return -1;
        }
    }

    ExprNode parse_binary(int min_power, int depth) {
        if (depth > kMaxDepth) throw ParseError(tok_.offset, "expression nested too deeply");
        ExprNode lhs = parse_prefix(depth);
        for (;;) {
            const int lp = left_power(tok_.kind);
            if (lp < 0 || lp < min_power) break;
            const Token op = tok_;
            advance();
            // Right associativity for '^' comes from reusing its own power.
            const int rp = op.kind == Tok::caret ? lp : lp + 1;
            ExprNode rhs = parse_binary(rp, depth + 1);
            ExprNode node;
            node.kind = ExprNode::Kind::binary;
            node.offset = op.offset;
            switch (op.kind) {
                case Tok::plus: node.op = BinaryOp::add; break;
                case Tok::minus: node.op = BinaryOp::sub; break;
                case Tok::star: node.op = BinaryOp::mul; break;
                case Tok::slash: node.op = BinaryOp::div; break;
                default: node.op = BinaryOp::pow; break;
            }
            node.args.push_back(std::move(lhs));
            node.args.push_back(std::move(rhs));
            lhs = std::move(node);
        }
        return lhs;
    }

    ExprNode parse_prefix(int depth) {
        if (depth > kMaxDepth) throw ParseError(tok_.offset, "expression nested too deeply");
        const Token t = tok_;
        switch (t.kind) {
            case Tok::number: {
                advance();
                ExprNode n;
                n.kind = ExprNode::Kind::number;
                n.value = t.number;
                n.offset = t.offset;
                return n;
            }
            case Tok::minus: {
                advance();
                ExprNode operand = parse_binary(25, depth + 1);
                ExprNode n;
                n.kind = ExprNode::Kind::negate;
                n.offset = t.offset;
                n.args.push_back(std::move(operand));
                return n;
            }
            case Tok::plus: {
                advance();
                return parse_binary(25, depth + 1);
            }
            case Tok::lparen: {
                advance();
                ExprNode inner = parse_binary(0, depth + 1);
                expect(Tok::rparen, "expected ')'");
                return inner;
            }
            case Tok::name: {
                advance();
                if (tok_.kind != Tok::lparen) {
                    ExprNode n;
                    n.kind = ExprNode::Kind::variable;
                    n.name = std::string(t.text);
                    n.offset = t.offset;
                    return n;
                }
                return parse_call(t, depth);
            }
            case Tok::end: throw ParseError(t.offset, "expected expression, found end of input");
            default: throw ParseError(t.offset, "expected expression");
        }
    }

    ExprNode parse_call(const Token& name, int depth) {
        const FuncInfo* info = nullptr;
        for (const auto& f : kFuncs) {
            if (f.name == name.text) info = &f;
        }
        if (info == nullptr) {
            throw ParseError(name.offset, "unknown function '" + std::string(name.text) + "'");
        }
        advance();  // '('
        ExprNode n;
        n.kind = ExprNode::Kind::call;
        n.func = info->func;
        n.offset = name.offset;
        if (tok_.kind != Tok::rparen) {
            n.args.push_back(parse_binary(0, depth + 1));
            while (tok_.kind == Tok::comma) {
                advance();
                n.args.push_back(parse_binary(0, depth + 1));
            }
        }
        expect(Tok::rparen, "expected ',' or ')'");
        if (static_cast<int>(n.args.size()) != info->arity) {
            throw ParseError(name.offset, "function '" + std::string(info->name) + "' expects " +
                                              std::to_string(info->arity) + " argument(s), got " +
                                              std::to_string(n.args.size()));
        }
        return n;
    }

    void expect(Tok kind, const char* what) {
        if (tok_.kind != kind) throw ParseError(tok_.offset, what);
        advance();
    }

    void advance() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r')) {
            ++pos_;
        }
        tok_ = Token{};
        tok_.offset = pos_;
        if (pos_ >= src_.size()) {
            tok_.kind = Tok::end;
            return;
        }
        const char c = src_[pos_];
        if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
            lex_number();
            return;
        }
        if (is_name_start(c)) {
            std::size_t end = pos_ + 1;
            while (end < src_.size() && (is_name_start(src_[end]) || is_digit(src_[end]))) ++end;
            tok_.kind = Tok::name;
            tok_.text = src_.substr(pos_, end - pos_);
            pos_ = end;
            return;
        }
        switch (c) {
            case '+': tok_.kind = Tok::plus; break;
            case '-': tok_.kind = Tok::minus; break;
            case '*': tok_.kind = Tok::star; break;
            case '/': tok_.kind = Tok::slash; break;
            case '^': tok_.kind = Tok::caret; break;
            case '(': tok_.kind = Tok::lparen; break;
            case ')': tok_.kind = Tok::rparen; break;
            case ',': tok_.kind = Tok::comma; break;
            default: throw ParseError(pos_, std::string("unexpected character '") + c + "'");
        }
        ++pos_;
    }

    void lex_number() {
        std::size_t end = pos_;
        while (end < src_.size() && is_digit(src_[end])) ++end;
        if (end < src_.size() && src_[end] == '.') {
            ++end;
            while (end < src_.size() && is_digit(src_[end])) ++end;
        }
        if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
            std::size_t exp_end = end + 1;
            if (exp_end < src_.size() && (src_[exp_end] == '+' || src_[exp_end] == '-')) ++exp_end;
            if (exp_end >= src_.size() || !is_digit(src_[exp_end])) {
                throw ParseError(exp_end, "expected exponent digits");
            }
            while (exp_end < src_.size() && is_digit(src_[exp_end])) ++exp_end;
            end = exp_end;
        }
        double value = 0.0;
        const auto res = std::from_chars(src_.data() + pos_, src_.data() + end, value);
        if (res.ec != std::errc{} || !std::isfinite(value)) {
            throw ParseError(pos_, "number out of range");
        }
        tok_.kind = Tok::number;
        tok_.number = value;
        tok_.text = src_.substr(pos_, end - pos_);
        pos_ = end;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Token tok_;
};

double apply_binary(BinaryOp op, double a, double b) {
    switch (op) {
        case BinaryOp::add: return a + b;
        case BinaryOp::sub: return a - b;
        case BinaryOp::mul: return a * b;
        case BinaryOp::div: return a / b;
        case BinaryOp::pow: return std::pow(a, b);
    }
    return 0.0;
}

double apply_func(Func f, double a, double b) {
    switch (f) {
        case Func::exp: return std::exp(a);
        case Func::log: return std::log(a);
        case Func::sqrt: return std::sqrt(a);
        case Func::tanh: return std::tanh(a);
        case Func::abs: return std::fabs(a);
        case Func::min: return std::fmin(a, b);
        case Func::max: return std::fmax(a, b);
    }
    return 0.0;
}

double checked(double v, std::size_t offset) {
    if (!std::isfinite(v)) throw EvalError(offset, "non-finite result");
    return v;
}

double eval_node(const ExprNode& n, double x, const ParamMap& params) {
    switch (n.kind) {
        case ExprNode::Kind::number: return n.value;
        case ExprNode::Kind::variable: {
            if (n.name == "x") return x;
            const auto it = params.find(n.name);
            if (it == params.end()) throw EvalError(n.offset, "unbound variable '" + n.name + "'");
            return it->second;
        }
        case ExprNode::Kind::negate: return -eval_node(n.args[0], x, params);
        case ExprNode::Kind::binary: {
            const double a = eval_node(n.args[0], x, params);
            const double b = eval_node(n.args[1], x, params);
            return checked(apply_binary(n.op, a, b), n.offset);
        }
        case ExprNode::Kind::call: {
            const double a = eval_node(n.args[0], x, params);
            const double b = n.args.size() > 1 ? eval_node(n.args[1], x, params) : 0.0;
            return checked(apply_func(n.func, a, b), n.offset);
        }
    }
    return 0.0;
}

void collect_variables(const ExprNode& n, std::set<std::string>& out) {
    if (n.kind == ExprNode::Kind::variable) out.insert(n.name);
    for (const auto& a : n.args) collect_variables(a, out);
}

void render(const ExprNode& n, std::string& out) {
    switch (n.kind) {
        case ExprNode::Kind::number: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            out += buf;
            return;
        }
        case ExprNode::Kind::variable: out += n.name; return;
        case ExprNode::Kind::negate:
            out += "(-";
            render(n.args[0], out);
            out += ')';
            return;
        case ExprNode::Kind::binary: {
            static constexpr const char* kOps[] = {" + ", " - ", " * ", " / ", " ^ "};
            out += '(';
            render(n.args[0], out);
            out += kOps[static_cast<int>(n.op)];
            render(n.args[1], out);
            out += ')';
            return;
        }
        case ExprNode::Kind::call:
            out += func_name(n.func);
            out += '(';
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i > 0) out += ", ";
                render(n.args[i], out);
            }
            out += ')';
            return;
    }
}

}  // namespace

bool operator==(const ExprNode& a, const ExprNode& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case ExprNode::Kind::number:
            if (a.value != b.value) return false;
            break;
        case ExprNode::Kind::variable:
            if (a.name != b.name) return false;
            break;
        case ExprNode::Kind::binary:
            if (a.op != b.op) return false;
            break;
        case ExprNode::Kind::call:
            if (a.func != b.func) return false;
            break;
        case ExprNode::Kind::negate: break;
    }
    return a.args == b.args;
}

std::vector<std::string> Expr::variables() const {
    std::set<std::string> names;
    collect_variables(root_, names);
    return {names.begin(), names.end()};
}

Expr parse(std::string_view src) {
    Parser p(src);
    return Expr(p.parse_all(), std::string(src));
}

double eval(const Expr& e, double x, const ParamMap& params) { return eval_node(e.root(), x, params); }

std::string to_string(const Expr& e) {
    std::string out;
    render(e.root(), out);
    return out;
}

int arity(Func f) noexcept {
    for (const auto& info : kFuncs) {
        if (info.func == f) return info.arity;
    }
    return 0;
}

std::string_view func_name(Func f) noexcept {
    for (const auto& info : kFuncs) {
        if (info.func == f) return info.name;
    }
    return {};
}

CompiledExpr CompiledExpr::compile(const Expr& e, const ParamMap& params) {
    CompiledExpr c;
    c.source_ = e.source();
    c.emit(e.root(), params, 1);
    return c;
}

void CompiledExpr::emit(const ExprNode& node, const ParamMap& params, int depth) {
    max_stack_ = std::max(max_stack_, static_cast<std::size_t>(depth));
    switch (node.kind) {
        case ExprNode::Kind::number: program_.push_back({Code::constant, node.value, node.offset}); return;
        case ExprNode::Kind::variable: {
            if (node.name == "x") {
                program_.push_back({Code::var_x, 0.0, node.offset});
                return;
            }
            const auto it = params.find(node.name);
            if (it == params.end()) throw EvalError(node.offset, "unbound variable '" + node.name + "'");
            program_.push_back({Code::constant, it->second, node.offset});
            return;
        }
        case ExprNode::Kind::negate:
            emit(node.args[0], params, depth);
            program_.push_back({Code::neg, 0.0, node.offset});
            return;
        case ExprNode::Kind::binary: {
            emit(node.args[0], params, depth);
            emit(node.args[1], params, depth + 1);
            static constexpr Code kCodes[] = {Code::add, Code::sub, Code::mul, Code::div, Code::pow};
            program_.push_back({kCodes[static_cast<int>(node.op)], 0.0, node.offset});
            return;
        }
        case ExprNode::Kind::call: {
            for (std::size_t i = 0; i < node.args.size(); ++i) emit(node.args[i], params, depth + static_cast<int>(i));
            static constexpr Code kCodes[] = {Code::exp, Code::log, Code::sqrt, Code::tanh, Code::abs, Code::min, Code::max};
            program_.push_back({kCodes[static_cast<int>(node.func)], 0.0, node.offset});
            return;
        }
    }
}

double CompiledExpr::operator()(double x) const {
    constexpr std::size_t kInline = 32;
    std::array<double, kInline> inline_stack{};
    std::vector<double> heap_stack;
    double* stack = inline_stack.data();
    if (max_stack_ > kInline) {
        heap_stack.resize(max_stack_);
        stack = heap_stack.data();
    }
    std::size_t top = 0;
    for (const Instr& in : program_) {
        switch (in.code) {
            case Code::constant: stack[top++] = in.value; continue;
            case Code::var_x: stack[top++] = x; continue;
            case Code::neg: stack[top - 1] = -stack[top - 1]; continue;
            default: break;
        }
        double r = 0.0;
        switch (in.code) {
            case Code::add: --top; r = stack[top - 1] + stack[top]; break;
            case Code::sub: --top; r = stack[top - 1] - stack[top]; break;
            case Code::mul: --top; r = stack[top - 1] * stack[top]; break;
            case Code::div: --top; r = stack[top - 1] / stack[top]; break;
            case Code::pow: --top; r = std::pow(stack[top - 1], stack[top]); break;
            case Code::min: --top; r = std::fmin(stack[top - 1], stack[top]); break;
            case Code::max: --top; r = std::fmax(stack[top - 1], stack[top]); break;
            case Code::exp: r = std::exp(stack[top - 1]); break;
            case Code::log: r = std::log(stack[top - 1]); break;
            case Code::sqrt: r = std::sqrt(stack[top - 1]); break;
            case Code::tanh: r = std::tanh(stack[top - 1]); break;
            case Code::abs: r = std::fabs(stack[top - 1]); break;
            default: break;
        }
        if (!std::isfinite(r)) throw EvalError(in.offset, "non-finite result");
        stack[top - 1] = r;
    }
    return stack[0];
}

}  // namespace pdmp
