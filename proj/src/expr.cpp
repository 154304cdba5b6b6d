#include "mfc/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace mfc {

bool Expr::operator==(const Expr& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
        case Kind::number: return number == o.number;
        case Kind::state_ref:
        case Kind::param_ref: return name == o.name;
        case Kind::action_ref: return action_index == o.action_index;
        case Kind::call:
            if (fn != o.fn) return false;
            break;
        default: break;
    }
    return args == o.args;
}

namespace {

struct Parser {
    std::string_view src;
    size_t pos = 0;

    [[noreturn]] void fail(const std::string& msg, size_t at) const {
        throw Error::parse("column " + std::to_string(at + 1) + ": " + msg);
    }

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    bool peek_is(char c) {
        skip_ws();
        return pos < src.size() && src[pos] == c;
    }

    bool consume(char c) {
        if (peek_is(c)) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c, const char* what) {
        if (!consume(c)) fail(std::string("expected '") + c + "' " + what, pos);
    }

    std::string ident() {
        skip_ws();
        size_t start = pos;
        if (pos >= src.size() ||
            !(std::isalpha(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
            fail("expected identifier", pos);
        while (pos < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
            ++pos;
        return std::string(src.substr(start, pos - start));
    }

    Expr parse() {
        Expr e = expr();
        skip_ws();
        if (pos != src.size()) fail("unexpected trailing input", pos);
        return e;
    }

    Expr expr() {
        Expr left = term();
        for (;;) {
            skip_ws();
            if (consume('+')) {
                Expr e;
                e.kind = Expr::Kind::add;
                e.args = {std::move(left), term()};
                left = std::move(e);
            } else if (consume('-')) {
                Expr e;
                e.kind = Expr::Kind::sub;
                e.args = {std::move(left), term()};
                left = std::move(e);
            } else {
                return left;
            }
        }
    }

    Expr term() {
        Expr left = factor();
        for (;;) {
            skip_ws();
            if (consume('*')) {
                Expr e;
                e.kind = Expr::Kind::mul;
                e.args = {std::move(left), factor()};
                left = std::move(e);
            } else if (consume('/')) {
                Expr e;
                e.kind = Expr::Kind::div;
                e.args = {std::move(left), factor()};
                left = std::move(e);
            } else {
                return left;
            }
        }
    }

    Expr factor() {
        skip_ws();
        if (pos >= src.size()) fail("expected expression", pos);
        char c = src[pos];
        if (c == '-') {
            ++pos;
            Expr e;
            e.kind = Expr::Kind::neg;
            e.args = {factor()};
            return e;
        }
        if (c == '(') {
            ++pos;
            Expr e = expr();
            expect(')', "to close '('");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return reference();
        fail("unexpected character", pos);
    }

    Expr number() {
        size_t start = pos;
        const char* begin = src.data() + pos;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number", start);
        size_t len = static_cast<size_t>(end - begin);
        if (pos + len > src.size()) len = src.size() - pos;
        pos += len;
        Expr e;
        e.kind = Expr::Kind::number;
        e.number = v;
        return e;
    }

    Expr reference() {
        size_t start = pos;
        std::string name = ident();
        if (name == "m" && peek_is('[')) {
            ++pos;
            std::string state = ident();
            expect(']', "to close 'm['");
            Expr e;
            e.kind = Expr::Kind::state_ref;
            e.name = std::move(state);
            return e;
        }
        if (name == "a") {
            Expr e;
            e.kind = Expr::Kind::action_ref;
            if (peek_is('[')) {
                ++pos;
                skip_ws();
                size_t istart = pos;
                if (pos >= src.size() || !std::isdigit(static_cast<unsigned char>(src[pos])))
                    fail("expected action index", istart);
                int idx = 0;
                while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) {
                    idx = idx * 10 + (src[pos] - '0');
                    ++pos;
                }
                expect(']', "to close 'a['");
                e.action_index = idx;
            }
            return e;
        }
        if ((name == "min" || name == "max" || name == "exp" || name == "log") && peek_is('(')) {
            ++pos;
            Expr e;
            e.kind = Expr::Kind::call;
            e.fn = name == "min"   ? Expr::Fn::min
                   : name == "max" ? Expr::Fn::max
                   : name == "exp" ? Expr::Fn::exp
                                   : Expr::Fn::log;
            e.args.push_back(expr());
            while (consume(',')) e.args.push_back(expr());
            expect(')', "to close call");
            if ((e.fn == Expr::Fn::exp || e.fn == Expr::Fn::log) && e.args.size() != 1)
                fail(name + " takes exactly one argument", start);
            if ((e.fn == Expr::Fn::min || e.fn == Expr::Fn::max) && e.args.size() < 2)
                fail(name + " takes at least two arguments", start);
            return e;
        }
        Expr e;
        e.kind = Expr::Kind::param_ref;
        e.name = std::move(name);
        return e;
    }
};

// Shortest decimal form that parses back to the same double.
std::string format_number(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

int precedence(Expr::Kind k) {
    switch (k) {
        case Expr::Kind::add:
        case Expr::Kind::sub: return 1;
        case Expr::Kind::mul:
        case Expr::Kind::div: return 2;
        case Expr::Kind::neg: return 3;
        default: return 4;
    }
}

void print(const Expr& e, std::string& out, int parent_prec, bool right_operand) {
    int prec = precedence(e.kind);
    bool parens = prec < parent_prec || (prec == parent_prec && right_operand);
    if (parens) out += '(';
    switch (e.kind) {
        case Expr::Kind::number:
            if (e.number < 0) {
                // keep the printed tree canonical: negative literals re-parse as neg(number)
                out += "(0 - " + format_number(-e.number) + ")";
            } else {
                out += format_number(e.number);
            }
            break;
        case Expr::Kind::state_ref: out += "m[" + e.name + "]"; break;
        case Expr::Kind::action_ref:
            out += e.action_index < 0 ? "a" : "a[" + std::to_string(e.action_index) + "]";
            break;
        case Expr::Kind::param_ref: out += e.name; break;
        case Expr::Kind::add:
            print(e.args[0], out, prec, false);
            out += " + ";
            print(e.args[1], out, prec, true);
            break;
        case Expr::Kind::sub:
            print(e.args[0], out, prec, false);
            out += " - ";
            print(e.args[1], out, prec, true);
            break;
        case Expr::Kind::mul:
            print(e.args[0], out, prec, false);
            out += " * ";
            print(e.args[1], out, prec, true);
            break;
        case Expr::Kind::div:
            print(e.args[0], out, prec, false);
            out += " / ";
            print(e.args[1], out, prec, true);
            break;
        case Expr::Kind::neg:
            out += '-';
            print(e.args[0], out, prec + 1, false);
            break;
        case Expr::Kind::call: {
            out += e.fn == Expr::Fn::min   ? "min"
                   : e.fn == Expr::Fn::max ? "max"
                   : e.fn == Expr::Fn::exp ? "exp"
                                           : "log";
            out += '(';
            for (size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                print(e.args[i], out, 0, false);
            }
            out += ')';
            break;
        }
    }
    if (parens) out += ')';
}

} // namespace

Expr parse_expr(std::string_view src) {
    Parser p{src};
    return p.parse();
}

std::string expr_to_string(const Expr& e) {
    std::string out;
    print(e, out, 0, false);
    return out;
}

namespace {

int find_name(const std::vector<std::string>& names, const std::string& name) {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

} // namespace

CompiledExpr compile_expr(const Expr& e, const std::vector<std::string>& state_names,
                          int action_dim, const std::vector<std::string>& param_names) {
    CompiledExpr out;
    int depth = 0;
    int max_depth = 0;
    auto push = [&](CompiledExpr::Op op, int index = 0, double value = 0.0) {
        out.code_.push_back({op, index, value});
    };
    auto track = [&](int delta) {
        depth += delta;
        max_depth = std::max(max_depth, depth);
    };

    // iterative postorder emit
    struct Frame {
        const Expr* node;
        size_t next_child = 0;
    };
    std::vector<Frame> stack{{&e, 0}};
    while (!stack.empty()) {
        Frame& f = stack.back();
        const Expr& n = *f.node;
        if (f.next_child < n.args.size()) {
            stack.push_back({&n.args[f.next_child++], 0});
            continue;
        }
        switch (n.kind) {
            case Expr::Kind::number:
                push(CompiledExpr::Op::push_num, 0, n.number);
                track(+1);
                break;
            case Expr::Kind::state_ref: {
                int idx = find_name(state_names, n.name);
                if (idx < 0) throw Error::validation("unknown state '" + n.name + "'");
                push(CompiledExpr::Op::push_state, idx);
                track(+1);
                break;
            }
            case Expr::Kind::action_ref: {
                int idx = n.action_index;
                if (idx < 0) {
                    if (action_dim != 1)
                        throw Error::validation(
                            "bare 'a' requires a one-component action space; use a[k]");
                    idx = 0;
                }
                if (idx >= action_dim)
                    throw Error::validation("action index a[" + std::to_string(idx) +
                                            "] out of range (dimension " +
                                            std::to_string(action_dim) + ")");
                push(CompiledExpr::Op::push_action, idx);
                track(+1);
                break;
            }
            case Expr::Kind::param_ref: {
                int idx = find_name(param_names, n.name);
                if (idx < 0) throw Error::validation("unknown parameter '" + n.name + "'");
                push(CompiledExpr::Op::push_param, idx);
                track(+1);
                break;
            }
            case Expr::Kind::add:
                push(CompiledExpr::Op::add);
                track(-1);
                break;
            case Expr::Kind::sub:
                push(CompiledExpr::Op::sub);
                track(-1);
                break;
            case Expr::Kind::mul:
                push(CompiledExpr::Op::mul);
                track(-1);
                break;
            case Expr::Kind::div:
                push(CompiledExpr::Op::div);
                track(-1);
                break;
            case Expr::Kind::neg: push(CompiledExpr::Op::neg); break;
            case Expr::Kind::call:
                switch (n.fn) {
                    case Expr::Fn::min:
                        for (size_t i = 1; i < n.args.size(); ++i) {
                            push(CompiledExpr::Op::min2);
                            track(-1);
                        }
                        break;
                    case Expr::Fn::max:
                        for (size_t i = 1; i < n.args.size(); ++i) {
                            push(CompiledExpr::Op::max2);
                            track(-1);
                        }
                        break;
                    case Expr::Fn::exp: push(CompiledExpr::Op::exp1); break;
                    case Expr::Fn::log: push(CompiledExpr::Op::log1); break;
                }
                break;
        }
        stack.pop_back();
    }
    out.stack_need_ = max_depth;
    return out;
}

double CompiledExpr::eval(const double* m, const double* a, const double* p) const {
    double local[32];
    std::vector<double> heap;
    double* st = local;
    if (stack_need_ > 32) {
        heap.resize(static_cast<size_t>(stack_need_));
        st = heap.data();
    }
    int top = -1;
    for (const Instr& in : code_) {
        switch (in.op) {
            case Op::push_num: st[++top] = in.value; break;
            case Op::push_state: st[++top] = m[in.index]; break;
            case Op::push_action: st[++top] = a[in.index]; break;
            case Op::push_param: st[++top] = p[in.index]; break;
            case Op::add: st[top - 1] += st[top]; --top; break;
            case Op::sub: st[top - 1] -= st[top]; --top; break;
            case Op::mul: st[top - 1] *= st[top]; --top; break;
            case Op::div:
                if (st[top] == 0.0) throw Error::eval("division by zero");
                st[top - 1] /= st[top];
                --top;
                break;
            case Op::neg: st[top] = -st[top]; break;
            case Op::min2: st[top - 1] = std::min(st[top - 1], st[top]); --top; break;
            case Op::max2: st[top - 1] = std::max(st[top - 1], st[top]); --top; break;
            case Op::exp1: st[top] = std::exp(st[top]); break;
            case Op::log1:
                if (st[top] <= 0.0) throw Error::eval("log of a non-positive value");
                st[top] = std::log(st[top]);
                break;
        }
    }
    return st[0];
}

} // namespace mfc
