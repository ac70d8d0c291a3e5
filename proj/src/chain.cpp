#include "lilchain/chain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "lilchain/errors.hpp"
#include "lilchain/io.hpp"
#include "lilchain/rng.hpp"

namespace lilchain {

namespace {

std::vector<bool> reachable(const Matrix& P, bool transpose) {
    const auto n = P.rows();
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<Eigen::Index> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        const auto i = stack.back();
        stack.pop_back();
        for (Eigen::Index j = 0; j < n; ++j) {
            const double w = transpose ? P(j, i) : P(i, j);
            if (w > 0.0 && !seen[static_cast<std::size_t>(j)]) {
                seen[static_cast<std::size_t>(j)] = true;
                stack.push_back(j);
            }
        }
    }
    return seen;
}

}  // namespace

bool is_irreducible(const Matrix& P) {
    if (P.rows() == 0) return false;
    const auto fwd = reachable(P, false);
    const auto bwd = reachable(P, true);
    return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
           std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

FiniteKernel FiniteKernel::create(std::vector<std::string> states, Matrix P, const Tolerances& tol) {
    const auto n = P.rows();
    if (n == 0) throw SpecError("empty state space");
    if (P.cols() != n) throw SpecError(fmt::format("P must be square, got {}x{}", n, P.cols()));
    if (static_cast<Eigen::Index>(states.size()) != n)
        throw SpecError(fmt::format("{} state labels for a {}-state kernel", states.size(), n));
    if (std::set<std::string>(states.begin(), states.end()).size() != states.size())
        throw SpecError("duplicate state labels");
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double p = P(i, j);
            if (!std::isfinite(p) || p < 0.0 || p > 1.0)
                throw SpecError(fmt::format("non-stochastic row {}: entry {} = {} outside [0,1]", i, j, p));
        }
        const double s = P.row(i).sum();
        if (std::abs(s - 1.0) > tol.row_sum)
            throw SpecError(fmt::format("non-stochastic row {}: sums to {}", i, s));
    }
    if (!is_irreducible(P)) throw SpecError("reducible chain: transition graph is not strongly connected");
    return FiniteKernel(std::move(states), std::move(P));
}

FiniteKernel FiniteKernel::create(Matrix P, const Tolerances& tol) {
    std::vector<std::string> states;
    for (Eigen::Index i = 0; i < P.rows(); ++i) states.push_back(fmt::format("s{}", i));
    return create(std::move(states), std::move(P), tol);
}

Vector stationary(const FiniteKernel& kernel, const Tolerances& tol) {
    const auto& P = kernel.P();
    const auto n = P.rows();
    Matrix A = P.transpose() - Matrix::Identity(n, n);
    A.row(n - 1).setOnes();
    Vector b = Vector::Zero(n);
    b(n - 1) = 1.0;

    Eigen::FullPivLU<Matrix> lu(A);
    if (!lu.isInvertible()) throw NumericError("stationary solve: singular system (degenerate kernel)");
    Vector pi = lu.solve(b);

    pi = (pi.transpose() * P).transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (pi(i) < 0.0) {
            if (pi(i) < -tol.stationary)
                throw NumericError(fmt::format("stationary solve: negative mass {} at state {}", pi(i), i));
            pi(i) = 0.0;
        }
    }
    pi /= pi.sum();

    const double defect = ((pi.transpose() * P).transpose() - pi).cwiseAbs().maxCoeff();
    if (defect > tol.stationary)
        throw NumericError(fmt::format("stationary solve: |pi P - pi| = {}", defect));
    return pi;
}

Eigen::RowVectorXd pi_mean(const Vector& pi, const Matrix& g) { return pi.transpose() * g; }

Observable make_observable(const Vector& pi, Matrix g, bool center, const Tolerances& tol) {
    if (g.rows() != pi.size())
        throw SpecError(fmt::format("g has {} rows for {} states", g.rows(), pi.size()));
    if (g.cols() < 1) throw SpecError("observable dimension d must be >= 1");
    if (!g.allFinite()) throw SpecError("g contains non-finite values");
    const Eigen::RowVectorXd mean = pi_mean(pi, g);
    if (center) {
        g.rowwise() -= mean;
    } else {
        for (Eigen::Index c = 0; c < g.cols(); ++c) {
            if (std::abs(mean(c)) > tol.centering)
                throw SpecError(fmt::format(
                    "observable not centered: pi-mean of coordinate {} is {} (set \"center\": true)", c + 1,
                    mean(c)));
        }
    }
    return Observable{std::move(g)};
}

ChainModel make_model(FiniteKernel kernel, Matrix g, bool center, const Tolerances& tol) {
    Vector pi = stationary(kernel, tol);
    const Eigen::RowVectorXd mean = pi_mean(pi, g);
    Observable obs = make_observable(pi, std::move(g), center, tol);
    Eigen::RowVectorXd removed = center ? mean : Eigen::RowVectorXd::Zero(obs.dim());
    return ChainModel{std::move(kernel), std::move(pi), std::move(obs), center, std::move(removed)};
}

ChainModel load_chain(const nlohmann::json& doc, const Tolerances& tol) {
    using nlohmann::json;
    if (!doc.is_object()) throw SpecError("malformed chain spec: top level must be an object");
    for (const char* key : {"states", "P", "g"})
        if (!doc.contains(key)) throw SpecError(fmt::format("malformed chain spec: missing \"{}\"", key));

    std::vector<std::string> states;
    const auto& js = doc.at("states");
    if (!js.is_array()) throw SpecError("malformed chain spec: \"states\" must be an array of strings");
    for (const auto& s : js) {
        if (!s.is_string()) throw SpecError("malformed chain spec: \"states\" must be an array of strings");
        states.push_back(s.get<std::string>());
    }
    const auto n = static_cast<Eigen::Index>(states.size());

    auto number = [](const json& v, const char* what) {
        if (!v.is_number()) throw SpecError(fmt::format("malformed chain spec: non-numeric entry in \"{}\"", what));
        return v.get<double>();
    };

    const auto& jP = doc.at("P");
    if (!jP.is_array() || static_cast<Eigen::Index>(jP.size()) != n)
        throw SpecError(fmt::format("malformed chain spec: \"P\" must have {} rows", n));
    Matrix P(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = jP[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
            throw SpecError(fmt::format("malformed chain spec: row {} of \"P\" must have {} entries", i, n));
        for (Eigen::Index j = 0; j < n; ++j) P(i, j) = number(row[static_cast<std::size_t>(j)], "P");
    }

    long d = -1;
    if (doc.contains("d")) {
        if (!doc.at("d").is_number_integer() || doc.at("d").get<long>() < 1)
            throw SpecError("malformed chain spec: \"d\" must be a positive integer");
        d = doc.at("d").get<long>();
    }
    const auto& jg = doc.at("g");
    if (!jg.is_array() || static_cast<Eigen::Index>(jg.size()) != n)
        throw SpecError(fmt::format("malformed chain spec: \"g\" must have {} rows", n));
    const bool flat = n > 0 && jg[0].is_number();
    if (flat) {
        if (d > 1) throw SpecError("malformed chain spec: flat \"g\" requires d = 1");
        d = 1;
    } else if (d < 0) {
        if (n == 0 || !jg[0].is_array()) throw SpecError("malformed chain spec: \"g\" rows must be arrays");
        d = static_cast<long>(jg[0].size());
    }
    Matrix g(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = jg[static_cast<std::size_t>(i)];
        if (flat) {
            g(i, 0) = number(row, "g");
            continue;
        }
        if (!row.is_array() || static_cast<long>(row.size()) != d)
            throw SpecError(fmt::format("malformed chain spec: row {} of \"g\" must have d = {} entries", i, d));
        for (long c = 0; c < d; ++c) g(i, c) = number(row[static_cast<std::size_t>(c)], "g");
    }

    bool center = false;
    if (doc.contains("center")) {
        if (!doc.at("center").is_boolean()) throw SpecError("malformed chain spec: \"center\" must be a boolean");
        center = doc.at("center").get<bool>();
    }

    return make_model(FiniteKernel::create(std::move(states), std::move(P), tol), std::move(g), center, tol);
}

ChainModel load_chain_file(const std::filesystem::path& path, const Tolerances& tol) {
    std::ifstream f(path);
    if (!f) throw SpecError("cannot open chain spec " + path.string());
    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw SpecError(fmt::format("malformed chain spec {}: {}", path.string(), e.what()));
    }
    return load_chain(doc, tol);
}

TransitionSampler::TransitionSampler(const FiniteKernel& kernel, const Vector& initial)
    : init_cdf_(make_cdf(initial.transpose())) {
    row_cdf_.reserve(static_cast<std::size_t>(kernel.size()));
    for (Eigen::Index i = 0; i < kernel.size(); ++i) row_cdf_.push_back(make_cdf(kernel.P().row(i)));
}

std::vector<double> TransitionSampler::make_cdf(const Eigen::Ref<const Eigen::RowVectorXd>& probs) {
    std::vector<double> cdf(static_cast<std::size_t>(probs.size()));
    double acc = 0.0;
    Eigen::Index last = 0;
    for (Eigen::Index j = 0; j < probs.size(); ++j) {
        acc += probs(j);
        cdf[static_cast<std::size_t>(j)] = acc;
        if (probs(j) > 0.0) last = j;
    }
    // Zero-probability states after the last positive one stay unreachable.
    for (auto j = static_cast<std::size_t>(last); j < cdf.size(); ++j) cdf[j] = 1.0;
    return cdf;
}

int TransitionSampler::draw(const std::vector<double>& cdf, double u) noexcept {
    if (cdf.size() <= 8) {
        int j = 0;
        while (u >= cdf[static_cast<std::size_t>(j)]) ++j;
        return j;
    }
    return static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

SamplePath simulate(const ChainModel& model, std::size_t n, std::uint64_t seed, std::uint64_t stream,
                    std::optional<int> start_state) {
    if (n < 1) throw ConfigError("simulate: path length n must be >= 1");
    const auto& g = model.obs.g;
    const auto d = g.cols();
    StreamRng rng(seed, stream);
    const TransitionSampler sampler(model.kernel, model.pi);

    SamplePath path;
    path.seed = seed;
    path.stream = stream;
    path.states.resize(n + 1);
    path.partial_sums.setZero(static_cast<Eigen::Index>(n + 1), d);

    int x = 0;
    if (start_state) {
        if (*start_state < 0 || *start_state >= model.kernel.size())
            throw ConfigError(fmt::format("start state {} out of range", *start_state));
        x = *start_state;
    } else {
        x = sampler.initial(rng.uniform());
    }
    path.states[0] = x;
    for (std::size_t k = 0; k < n; ++k) {
        const auto r = static_cast<Eigen::Index>(k);
        path.partial_sums.row(r + 1) = path.partial_sums.row(r) + g.row(x);
        x = sampler.next(x, rng.uniform());
        path.states[k + 1] = x;
    }
    return path;
}

void write_path_csv(std::ostream& out, const SamplePath& path, const FiniteKernel& kernel) {
    const auto d = path.partial_sums.cols();
    std::vector<std::string> header{"k", "state"};
    for (auto& h : io::indexed("S", d)) header.push_back(std::move(h));
    out << io::join(header) << '\n';
    for (std::size_t k = 0; k < path.states.size(); ++k) {
        out << k << ',' << kernel.states()[static_cast<std::size_t>(path.states[k])];
        for (Eigen::Index c = 0; c < d; ++c)
            out << ',' << io::num(path.partial_sums(static_cast<Eigen::Index>(k), c));
        out << '\n';
    }
}

}  // namespace lilchain
