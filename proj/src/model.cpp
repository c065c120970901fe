#include "mpm/model.hpp"

#include <cmath>
#include <sstream>

namespace mpm {

namespace {

thread_local std::vector<double> scratch_values;

std::span<const double> state_values(const State& s) {
    scratch_values.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        scratch_values[i] = static_cast<double>(s[i]);
    }
    return scratch_values;
}

double pow_int(double base, int exponent) {
    double r = 1.0;
    for (int i = 0; i < exponent; ++i) r *= base;
    return r;
}

}  // namespace

double eval_number(const Expr& e, std::span<const double> values) {
    switch (e.kind) {
        case Expr::Kind::Number:
        case Expr::Kind::Constant:
            return e.number;
        case Expr::Kind::Variable:
            return values[static_cast<std::size_t>(e.var_index)];
        case Expr::Kind::Neg:
            return -eval_number(*e.lhs, values);
        case Expr::Kind::Binary: {
            double a = eval_number(*e.lhs, values);
            double b = eval_number(*e.rhs, values);
            switch (e.binary_op) {
                case BinaryOp::Add: return a + b;
                case BinaryOp::Sub: return a - b;
                case BinaryOp::Mul: return a * b;
                case BinaryOp::Div:
                    if (b == 0.0) {
                        throw ModelEvalError("division by zero in expression");
                    }
                    return a / b;
                case BinaryOp::Pow:
                    if (e.int_exponent >= 0) return pow_int(a, e.int_exponent);
                    return std::pow(a, b);
            }
            break;
        }
        default:
            break;
    }
    throw ModelEvalError("boolean expression used in numeric context");
}

bool eval_bool(const Expr& e, std::span<const double> values) {
    switch (e.kind) {
        case Expr::Kind::BoolLit:
            return e.bool_value;
        case Expr::Kind::Not:
            return !eval_bool(*e.lhs, values);
        case Expr::Kind::Logic: {
            if (e.logic_op == LogicOp::And) {
                return eval_bool(*e.lhs, values) && eval_bool(*e.rhs, values);
            }
            return eval_bool(*e.lhs, values) || eval_bool(*e.rhs, values);
        }
        case Expr::Kind::Compare: {
            double a = eval_number(*e.lhs, values);
            double b = eval_number(*e.rhs, values);
            switch (e.compare_op) {
                case CompareOp::Lt: return a < b;
                case CompareOp::Le: return a <= b;
                case CompareOp::Gt: return a > b;
                case CompareOp::Ge: return a >= b;
                case CompareOp::Eq: return a == b;
                case CompareOp::Ne: return a != b;
            }
            break;
        }
        default:
            break;
    }
    throw ModelEvalError("numeric expression used in boolean context");
}

ExprPtr clone(const Expr& e) {
    auto c = std::make_unique<Expr>();
    c->kind = e.kind;
    c->number = e.number;
    c->name = e.name;
    c->var_index = e.var_index;
    c->bool_value = e.bool_value;
    c->binary_op = e.binary_op;
    c->compare_op = e.compare_op;
    c->logic_op = e.logic_op;
    c->int_exponent = e.int_exponent;
    if (e.lhs) c->lhs = clone(*e.lhs);
    if (e.rhs) c->rhs = clone(*e.rhs);
    return c;
}

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Expr::Kind::Number: return a.number == b.number;
        case Expr::Kind::Constant: return a.name == b.name && a.number == b.number;
        case Expr::Kind::Variable: return a.var_index == b.var_index;
        case Expr::Kind::BoolLit: return a.bool_value == b.bool_value;
        case Expr::Kind::Neg:
        case Expr::Kind::Not:
            return structurally_equal(*a.lhs, *b.lhs);
        case Expr::Kind::Binary:
            return a.binary_op == b.binary_op && structurally_equal(*a.lhs, *b.lhs) &&
                   structurally_equal(*a.rhs, *b.rhs);
        case Expr::Kind::Compare:
            return a.compare_op == b.compare_op && structurally_equal(*a.lhs, *b.lhs) &&
                   structurally_equal(*a.rhs, *b.rhs);
        case Expr::Kind::Logic:
            return a.logic_op == b.logic_op && structurally_equal(*a.lhs, *b.lhs) &&
                   structurally_equal(*a.rhs, *b.rhs);
    }
    return false;
}

std::vector<std::int64_t> GuardedCommand::change_vector(std::size_t num_variables) const {
    std::vector<std::int64_t> v(num_variables, 0);
    for (const Update& u : updates) {
        v[static_cast<std::size_t>(u.var_index)] = u.delta;
    }
    return v;
}

std::optional<int> Model::variable_index(const std::string& name) const {
    for (std::size_t i = 0; i < variables.size(); ++i) {
        if (variables[i] == name) return static_cast<int>(i);
    }
    return std::nullopt;
}

bool enabled(const Model& model, const GuardedCommand& cmd, const State& s) {
    for (const Update& u : cmd.updates) {
        if (s[static_cast<std::size_t>(u.var_index)] + u.delta < 0) return false;
    }
    (void)model;
    return eval_bool(*cmd.guard, state_values(s));
}

double eval_rate(const Model& model, const GuardedCommand& cmd, const State& s) {
    double value;
    try {
        value = eval_number(*cmd.rate, state_values(s));
    } catch (const ModelEvalError& e) {
        throw ModelEvalError(std::string(e.what()) + " while evaluating rate of command " +
                             (cmd.label.empty() ? "<unlabeled>" : cmd.label) + " at state " +
                             state_to_string(s));
    }
    if (!std::isfinite(value) || value < 0.0) {
        std::ostringstream msg;
        msg << "rate of command " << (cmd.label.empty() ? "<unlabeled>" : cmd.label)
            << " evaluates to " << value << " at state " << state_to_string(s)
            << "; rates must be finite and non-negative";
        throw ModelEvalError(msg.str());
    }
    (void)model;
    return value;
}

State successor(const State& s, const GuardedCommand& cmd) {
    State t = s;
    for (const Update& u : cmd.updates) {
        t[static_cast<std::size_t>(u.var_index)] += u.delta;
    }
    return t;
}

double exit_rate(const Model& model, const State& s) {
    double total = 0.0;
    for (const GuardedCommand& cmd : model.commands) {
        if (enabled(model, cmd, s)) total += eval_rate(model, cmd, s);
    }
    return total;
}

std::string state_to_string(const State& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    out += ")";
    return out;
}

}  // namespace mpm
