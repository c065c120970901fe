#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpm/errors.hpp"

namespace mpm {

// Population vector, one non-negative count per declared variable.
using State = std::vector<std::int64_t>;

enum class Semantics { Ctmc, Dtmc };

// ---------------------------------------------------------------------------
// Expressions

enum class BinaryOp { Add, Sub, Mul, Div, Pow };
enum class CompareOp { Lt, Le, Gt, Ge, Eq, Ne };
enum class LogicOp { And, Or };

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

// Infix guard/rate AST. Constant references are resolved to their values at
// parse time but keep their name for printing.
struct Expr {
    enum class Kind {
        Number,    // numeric literal
        Constant,  // named constant, value resolved at parse time
        Variable,  // population variable by index
        Neg,       // unary minus
        Binary,
        Compare,
        Logic,
        Not,
        BoolLit,
    };

    Kind kind = Kind::Number;
    double number = 0.0;   // Number / Constant value
    std::string name;      // Constant / Variable name
    int var_index = -1;    // Variable
    bool bool_value = false;
    BinaryOp binary_op{};
    CompareOp compare_op{};
    LogicOp logic_op{};
    // Pow with a non-negative integer literal exponent is evaluated by
    // repeated multiplication; everything else goes through std::pow.
    int int_exponent = -1;
    ExprPtr lhs, rhs;

    static ExprPtr make(Kind k) {
        auto e = std::make_unique<Expr>();
        e->kind = k;
        return e;
    }

    static ExprPtr make_number(double v) {
        ExprPtr e = make(Kind::Number);
        e->number = v;
        return e;
    }
    static ExprPtr make_constant(std::string name, double v) {
        ExprPtr e = make(Kind::Constant);
        e->name = std::move(name);
        e->number = v;
        return e;
    }
    static ExprPtr make_variable(std::string name, int index) {
        ExprPtr e = make(Kind::Variable);
        e->name = std::move(name);
        e->var_index = index;
        return e;
    }
    static ExprPtr make_bool(bool v) {
        ExprPtr e = make(Kind::BoolLit);
        e->bool_value = v;
        return e;
    }
    static ExprPtr make_neg(ExprPtr x) {
        ExprPtr e = make(Kind::Neg);
        e->lhs = std::move(x);
        return e;
    }
    static ExprPtr make_not(ExprPtr x) {
        ExprPtr e = make(Kind::Not);
        e->lhs = std::move(x);
        return e;
    }
    static ExprPtr make_binary(BinaryOp op, ExprPtr l, ExprPtr r) {
        ExprPtr e = make(Kind::Binary);
        e->binary_op = op;
        if (op == BinaryOp::Pow &&
            (r->kind == Kind::Number || r->kind == Kind::Constant)) {
            double v = r->number;
            if (v >= 0.0 && v <= 64.0 && v == static_cast<double>(static_cast<int>(v))) {
                e->int_exponent = static_cast<int>(v);
            }
        }
        e->lhs = std::move(l);
        e->rhs = std::move(r);
        return e;
    }
    static ExprPtr make_compare(CompareOp op, ExprPtr l, ExprPtr r) {
        ExprPtr e = make(Kind::Compare);
        e->compare_op = op;
        e->lhs = std::move(l);
        e->rhs = std::move(r);
        return e;
    }
    static ExprPtr make_logic(LogicOp op, ExprPtr l, ExprPtr r) {
        ExprPtr e = make(Kind::Logic);
        e->logic_op = op;
        e->lhs = std::move(l);
        e->rhs = std::move(r);
        return e;
    }
};

double eval_number(const Expr& e, std::span<const double> values);
bool eval_bool(const Expr& e, std::span<const double> values);
ExprPtr clone(const Expr& e);
bool structurally_equal(const Expr& a, const Expr& b);

// ---------------------------------------------------------------------------
// Model

struct Update {
    int var_index;
    std::int64_t delta;  // non-zero constant increment
};

struct GuardedCommand {
    std::string label;  // optional, may be empty
    ExprPtr guard;      // boolean
    ExprPtr rate;       // numeric
    std::vector<Update> updates;  // each variable at most once

    // Change vector over all model variables (zero for untouched ones).
    std::vector<std::int64_t> change_vector(std::size_t num_variables) const;
};

struct ConstantDef {
    std::string name;
    double value;
};

struct Model {
    std::vector<std::string> variables;
    State initial_state;
    std::vector<ConstantDef> constants;
    std::vector<GuardedCommand> commands;
    Semantics semantics = Semantics::Ctmc;

    std::size_t num_variables() const { return variables.size(); }
    std::size_t num_commands() const { return commands.size(); }
    std::optional<int> variable_index(const std::string& name) const;
};

// True iff the textual guard holds and no update would drive a variable
// negative (commands that would are treated as disabled).
bool enabled(const Model& model, const GuardedCommand& cmd, const State& s);

// Value of the rate expression at s. Requires the guard to hold; a negative
// or non-finite value raises ModelEvalError naming the state and command.
double eval_rate(const Model& model, const GuardedCommand& cmd, const State& s);

// s with the command's increments applied.
State successor(const State& s, const GuardedCommand& cmd);

// Sum of enabled rates; 0 means s is absorbing.
double exit_rate(const Model& model, const State& s);

std::string state_to_string(const State& s);

}  // namespace mpm
