#include "jan/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "jan/error.hpp"

namespace jan {

namespace {

double evaluate(const LossGraph& graph, const std::vector<NamedTensor>& params) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) vars.push_back(tape.parameter(ParamId{i}, params[i].value));
    return graph(tape, vars).value().item();
}

} // namespace

GradcheckReport gradcheck(const LossGraph& graph, std::vector<NamedTensor> params, double tolerance, double step) {
    GradcheckReport report;

    Gradients analytic;
    try {
        Tape tape;
        std::vector<Var> vars;
        for (std::size_t i = 0; i < params.size(); ++i) vars.push_back(tape.parameter(ParamId{i}, params[i].value));
        analytic = tape.backward(graph(tape, vars));
    } catch (const NumericError& e) {
        report.failure = std::string("analytic pass: ") + e.what();
        return report;
    }

    for (std::size_t p = 0; p < params.size(); ++p) {
        const Tensor& ga = analytic.at(ParamId{p});
        for (std::size_t i = 0; i < params[p].value.size(); ++i) {
            const std::string where = params[p].name + "[" + std::to_string(i) + "]";
            const double a = ga[i];
            if (!std::isfinite(a)) {
                report.failure = "non-finite analytic gradient at " + where;
                report.worst_location = where;
                return report;
            }
            const double original = params[p].value[i];
            double up, down;
            try {
                params[p].value[i] = original + step;
                up = evaluate(graph, params);
                params[p].value[i] = original - step;
                down = evaluate(graph, params);
            } catch (const NumericError& e) {
                params[p].value[i] = original;
                report.failure = "non-finite loss while perturbing " + where + ": " + e.what();
                report.worst_location = where;
                return report;
            }
            params[p].value[i] = original;
            const double n = (up - down) / (2.0 * step);
            const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
            ++report.entries_checked;
            if (rel > report.max_relative_error || report.worst_location.empty()) {
                report.max_relative_error = std::max(rel, report.max_relative_error);
                report.worst_location = where;
            }
        }
    }
    report.pass = report.max_relative_error <= tolerance;
    return report;
}

} // namespace jan
