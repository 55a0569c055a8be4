#include "rfi/gibbs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numeric>
#include <thread>

#include "rfi/errors.hpp"
#include "rfi/genetics.hpp"

namespace rfi {
namespace {

constexpr double kVarianceFloor = 1e-8;
constexpr int kMaxEquations = 8;

// Stack-allocated small types keep the per-animal updates free of heap churn.
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxEquations,
                               kMaxEquations>;
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxEquations, 1>;

double floored_scalar_variance(double ss, double nu0, double s02, double count,
                               const char* what, Rng& rng) {
    double df = nu0 + count;
    if (df <= 0.0)
        throw ValidationError(std::string(what) +
                              ": posterior degrees of freedom are not positive; "
                              "use a proper prior or more levels");
    double draw = (ss + nu0 * s02) / rng.chi_square(df);
    if (!(draw > kVarianceFloor)) {
        std::cerr << "warning: " << what << " draw clamped to variance floor\n";
        draw = kVarianceFloor;
    }
    return draw;
}

Eigen::MatrixXd positive_definite_iw(double df, const Eigen::MatrixXd& scale, Rng& rng,
                                     const std::string& what) {
    for (int attempt = 0; attempt < 2; ++attempt) {
        Eigen::MatrixXd draw = inverse_wishart(df, scale, rng);
        Eigen::LLT<Eigen::MatrixXd> llt(draw);
        if (llt.info() == Eigen::Success && draw.diagonal().minCoeff() > kVarianceFloor)
            return draw;
    }
    throw NumericalError(what + ": covariance draw not positive definite after retry");
}

SmallMat checked_inverse(const Eigen::MatrixXd& block, const char* what) {
    Eigen::LLT<SmallMat> llt{SmallMat(block)};
    if (llt.info() != Eigen::Success)
        throw NumericalError(std::string(what) + ": covariance block not positive definite");
    return llt.solve(SmallMat::Identity(block.rows(), block.cols()));
}

/// Draw one location-effect block from its full conditional and keep the
/// running residuals in sync. `residuals` holds y* - predictor for the group
/// columns, including the current `value`, so the data part of the right-hand
/// side is sum(residual) + count * value.
void location_block_update(const std::vector<int>& records, SmallVec& value,
                           const SmallMat& r_inv, const SmallMat& prior_precision,
                           const SmallVec& prior_rhs, Eigen::MatrixXd& residuals, Rng& rng) {
    const int nt = static_cast<int>(value.size());
    SmallVec sum_e = SmallVec::Zero(nt);
    for (int i : records) sum_e += residuals.row(i).transpose();
    const double count = static_cast<double>(records.size());

    SmallMat precision = count * r_inv + prior_precision;
    Eigen::LLT<SmallMat> llt(precision);
    if (llt.info() != Eigen::Success)
        throw NumericalError("location update: conditional precision not positive definite");
    SmallVec rhs = r_inv * (sum_e + count * value) + prior_rhs;
    SmallVec z(nt);
    for (int t = 0; t < nt; ++t) z(t) = rng.gaussian();
    SmallVec draw = llt.solve(rhs) + llt.matrixU().solve(z);

    SmallVec shift = value - draw;
    for (int i : records) residuals.row(i) += shift.transpose();
    value = draw;
}

}  // namespace

ModelLayout ModelLayout::from_spec(const ModelSpec& spec,
                                   const std::vector<std::string>& trait_names) {
    ModelLayout lay;
    lay.intercept = spec.intercept;
    lay.dim_effect = spec.dim_effect;
    lay.tw_effect = spec.tw_effect;
    lay.animal_effect = spec.animal_effect;
    const auto& sinks = spec.sink_indices;
    auto name_of = [&](int t) -> const std::string& { return trait_names.at(t); };

    switch (spec.family) {
        case Family::lr1:
        case Family::lr2:
        case Family::lr3:
            lay.model_traits = {0};
            lay.labels = {"rfi"};
            lay.blocks.push_back({0, sinks});
            lay.groups = {{0, 1}};
            break;
        case Family::rsem1:
        case Family::rsem2:
        case Family::rsem3:
            lay.model_traits.push_back(0);
            lay.labels.emplace_back("rfi");
            for (int s : sinks) {
                lay.model_traits.push_back(s);
                lay.labels.push_back(name_of(s));
            }
            lay.blocks.push_back({0, sinks});
            lay.groups = {{0, 1}, {1, static_cast<int>(sinks.size())}};
            lay.intake_transform = lay.animal_effect;
            break;
        case Family::st:
            lay.model_traits = {spec.st_trait};
            lay.labels = {name_of(spec.st_trait)};
            lay.groups = {{0, 1}};
            break;
        case Family::mt:
            lay.model_traits.push_back(0);
            for (int s : sinks) lay.model_traits.push_back(s);
            for (int t : lay.model_traits) lay.labels.push_back(name_of(t));
            lay.groups = {{0, static_cast<int>(lay.model_traits.size())}};
            lay.mt_full = true;
            break;
        case Family::mt_chol: {
            lay.model_traits.assign(sinks.rbegin(), sinks.rend());
            lay.model_traits.push_back(0);
            for (int t : lay.model_traits) lay.labels.push_back(name_of(t));
            const int m = static_cast<int>(lay.model_traits.size());
            for (int p = 1; p < m; ++p) {
                StructuralBlockSpec block;
                block.equation = p;
                block.regressors.assign(lay.model_traits.begin(), lay.model_traits.begin() + p);
                lay.blocks.push_back(std::move(block));
            }
            for (int p = 0; p < m; ++p) lay.groups.push_back({p, 1});
            break;
        }
    }
    return lay;
}

GibbsSampler::GibbsSampler(ModelLayout layout, const PhenotypeTable& standardized,
                           const Design& design, const Eigen::SparseMatrix<double>& a_inverse,
                           PriorSpec priors)
    : layout_(std::move(layout)),
      design_(design),
      a_inv_(a_inverse),
      priors_(std::move(priors)) {
    priors_.validate();
    const int m = layout_.m();
    if (m == 0) throw ValidationError("model layout has no equations");
    if (m > kMaxEquations)
        throw ValidationError("model layout exceeds the supported equation count");
    if (static_cast<int>(layout_.labels.size()) != m)
        throw ValidationError("layout labels do not match the equation count");
    for (int t : layout_.model_traits)
        if (t < 0 || t >= standardized.k())
            throw ValidationError("modeled trait index out of range");
    for (size_t i = 0; i < layout_.model_traits.size(); ++i)
        for (size_t j = i + 1; j < layout_.model_traits.size(); ++j)
            if (layout_.model_traits[i] == layout_.model_traits[j])
                throw ValidationError("a trait may appear in only one equation");

    int covered = 0;
    for (auto [p0, nt] : layout_.groups) {
        if (p0 != covered || nt < 1)
            throw ValidationError("covariance groups must tile the equations in order");
        covered += nt;
    }
    if (covered != m) throw ValidationError("covariance groups must cover every equation");

    for (const auto& block : layout_.blocks) {
        if (block.equation < 0 || block.equation >= m)
            throw ValidationError("coefficient block names an equation out of range");
        if (block.regressors.empty())
            throw ValidationError("coefficient block has no regressors");
        for (auto [p0, nt] : layout_.groups)
            if (block.equation >= p0 && block.equation < p0 + nt && nt != 1)
                throw ValidationError(
                    "equations with coefficient blocks need a scalar residual variance");
    }

    if (design_.n() != standardized.n())
        throw ValidationError("design and phenotype table sizes differ");
    if (design_.n() == 0) throw ValidationError("no phenotype records");
    if (layout_.animal_effect &&
        (a_inv_.rows() != design_.q() || a_inv_.cols() != design_.q()))
        throw ValidationError("relationship inverse does not match the pedigree");
    if (layout_.intercept && layout_.dim_effect && design_.n_dim() == 1)
        throw ValidationError(
            "days-in-milk factor has a single level and is not estimable next to an intercept");
    if (layout_.intercept && layout_.tw_effect && design_.n_tw() == 1)
        throw ValidationError(
            "test-week factor has a single level and is not estimable next to an intercept");
    if (std::isfinite(priors_.nu0) && priors_.nu0 + design_.n() <= 0)
        throw ValidationError("residual variance posterior df not positive");
    if (layout_.animal_effect && priors_.nu0 + design_.q() <= 0)
        throw ValidationError("genetic variance posterior df not positive");
    if (layout_.tw_effect && priors_.nu0_tw + design_.n_tw() <= 0)
        throw ValidationError("test-week variance posterior df not positive");

    data_ = standardized.traits;
    trait_names_ = standardized.trait_names;
    for (const auto& block : layout_.blocks) {
        Eigen::MatrixXd S(design_.n(), static_cast<int>(block.regressors.size()));
        int c = 0;
        for (int r : block.regressors) S.col(c++) = data_.col(r);
        block_StS_.push_back(S.transpose() * S);
        block_S_.push_back(std::move(S));
    }
    build_param_map();
}

void GibbsSampler::set_responses(const Eigen::MatrixXd& by_equation) {
    if (by_equation.rows() != data_.rows() || by_equation.cols() != layout_.m())
        throw ValidationError("replacement responses must be records x equations");
    for (int p = 0; p < layout_.m(); ++p) data_.col(layout_.model_traits[p]) = by_equation.col(p);
    for (size_t b = 0; b < layout_.blocks.size(); ++b) {
        int c = 0;
        for (int r : layout_.blocks[b].regressors) block_S_[b].col(c++) = data_.col(r);
        block_StS_[b] = block_S_[b].transpose() * block_S_[b];
    }
}

int GibbsSampler::equation_of(int data_trait) const {
    for (int p = 0; p < layout_.m(); ++p)
        if (layout_.model_traits[p] == data_trait) return p;
    return -1;
}

FitState GibbsSampler::make_state(Rng& rng, bool random_init) const {
    const int m = layout_.m();
    FitState state;
    for (const auto& block : layout_.blocks) {
        Eigen::VectorXd v(static_cast<int>(block.regressors.size()));
        for (int i = 0; i < v.size(); ++i)
            v(i) = random_init ? rng.uniform(-0.5, 0.5) : priors_.lambda0;
        state.coeffs.push_back(std::move(v));
    }
    state.mu = Eigen::VectorXd::Zero(m);
    state.beta = Eigen::MatrixXd::Zero(design_.n_dim(), m);
    state.tw = Eigen::MatrixXd::Zero(design_.n_tw(), m);
    state.a = Eigen::MatrixXd::Zero(design_.q(), m);
    state.G = Eigen::MatrixXd::Zero(m, m);
    state.R = Eigen::MatrixXd::Zero(m, m);
    state.tw_var = Eigen::VectorXd::Zero(m);
    for (int p = 0; p < m; ++p) {
        if (layout_.animal_effect) state.G(p, p) = random_init ? rng.uniform(0.1, 1.0) : 0.5;
        state.R(p, p) = random_init ? rng.uniform(0.1, 1.0) : 0.5;
        if (layout_.tw_effect) state.tw_var(p) = random_init ? rng.uniform(0.1, 1.0) : 0.5;
    }
    return state;
}

Eigen::MatrixXd GibbsSampler::working_responses(const FitState& state) const {
    Eigen::MatrixXd y(design_.n(), layout_.m());
    for (int p = 0; p < layout_.m(); ++p) y.col(p) = data_.col(layout_.model_traits[p]);
    for (size_t b = 0; b < layout_.blocks.size(); ++b)
        y.col(layout_.blocks[b].equation) -= block_S_[b] * state.coeffs[b];
    return y;
}

Eigen::MatrixXd GibbsSampler::location_predictor(const FitState& state) const {
    const int n = design_.n();
    Eigen::MatrixXd pred = Eigen::MatrixXd::Zero(n, layout_.m());
    if (layout_.intercept) pred.rowwise() += state.mu.transpose();
    for (int i = 0; i < n; ++i) {
        if (layout_.dim_effect) pred.row(i) += state.beta.row(design_.dim_level[i]);
        if (layout_.tw_effect) pred.row(i) += state.tw.row(design_.tw_level[i]);
        if (layout_.animal_effect) pred.row(i) += state.a.row(design_.animal[i]);
    }
    return pred;
}

StructuralConditional GibbsSampler::structural_conditional_for(const FitState& state,
                                                               int block) const {
    const auto& spec = layout_.blocks.at(static_cast<size_t>(block));
    Eigen::VectorXd w = data_.col(layout_.model_traits[spec.equation]) -
                        location_predictor(state).col(spec.equation);
    double sigma2_e = state.R(spec.equation, spec.equation);
    return structural_conditional(block_StS_[static_cast<size_t>(block)],
                                  block_S_[static_cast<size_t>(block)].transpose() * w,
                                  sigma2_e, priors_.lambda0, priors_.tau2);
}

void GibbsSampler::sample_structural_block(FitState& state, int block, Rng& rng) const {
    state.coeffs[static_cast<size_t>(block)] =
        sample_structural(structural_conditional_for(state, block), rng);
}

void GibbsSampler::sample_location_group(FitState& state, int group, Rng& rng) const {
    if (!layout_.intercept && !layout_.dim_effect && !layout_.tw_effect &&
        !layout_.animal_effect)
        return;
    const auto [p0, nt] = layout_.groups.at(static_cast<size_t>(group));
    Eigen::MatrixXd residuals = working_responses(state).middleCols(p0, nt) -
                                location_predictor(state).middleCols(p0, nt);
    const SmallMat r_inv =
        checked_inverse(state.R.block(p0, p0, nt, nt), "residual covariance");

    if (layout_.intercept) {
        std::vector<int> all(static_cast<size_t>(design_.n()));
        std::iota(all.begin(), all.end(), 0);
        SmallVec v = state.mu.segment(p0, nt);
        location_block_update(all, v, r_inv, SmallMat::Zero(nt, nt), SmallVec::Zero(nt),
                              residuals, rng);
        state.mu.segment(p0, nt) = v;
    }
    if (layout_.dim_effect) {
        const SmallMat prior_prec = (1.0 / priors_.omega2) * SmallMat::Identity(nt, nt);
        const SmallVec prior_rhs =
            (priors_.beta0 / priors_.omega2) * SmallVec::Ones(nt);
        for (int l = 0; l < design_.n_dim(); ++l) {
            SmallVec v = state.beta.row(l).segment(p0, nt).transpose();
            location_block_update(design_.records_by_dim[static_cast<size_t>(l)], v, r_inv,
                                  prior_prec, prior_rhs, residuals, rng);
            state.beta.row(l).segment(p0, nt) = v.transpose();
        }
    }
    if (layout_.tw_effect) {
        SmallMat prior_prec = SmallMat::Zero(nt, nt);
        for (int t = 0; t < nt; ++t) prior_prec(t, t) = 1.0 / state.tw_var(p0 + t);
        const SmallVec zero_rhs = SmallVec::Zero(nt);
        for (int l = 0; l < design_.n_tw(); ++l) {
            SmallVec v = state.tw.row(l).segment(p0, nt).transpose();
            location_block_update(design_.records_by_tw[static_cast<size_t>(l)], v, r_inv,
                                  prior_prec, zero_rhs, residuals, rng);
            state.tw.row(l).segment(p0, nt) = v.transpose();
        }
    }
    if (layout_.animal_effect) {
        const SmallMat g_inv =
            checked_inverse(state.G.block(p0, p0, nt, nt), "genetic covariance");
        for (int i = 0; i < design_.q(); ++i) {
            SmallVec relatives = SmallVec::Zero(nt);
            double diag = 0.0;
            for (Eigen::SparseMatrix<double>::InnerIterator it(a_inv_, i); it; ++it) {
                if (it.row() == i) {
                    diag = it.value();
                    continue;
                }
                relatives += it.value() * state.a.row(it.row()).segment(p0, nt).transpose();
            }
            const SmallMat prior_prec = diag * g_inv;
            const SmallVec prior_rhs = -(g_inv * relatives);
            SmallVec v = state.a.row(i).segment(p0, nt).transpose();
            location_block_update(design_.records_by_animal[static_cast<size_t>(i)], v, r_inv,
                                  prior_prec, prior_rhs, residuals, rng);
            state.a.row(i).segment(p0, nt) = v.transpose();
        }
    }
}

void GibbsSampler::sample_variance_group(FitState& state, int group, Rng& rng) const {
    const auto [p0, nt] = layout_.groups.at(static_cast<size_t>(group));
    const std::string& label = layout_.labels[static_cast<size_t>(p0)];
    Eigen::MatrixXd residuals = working_responses(state).middleCols(p0, nt) -
                                location_predictor(state).middleCols(p0, nt);
    const double n = design_.n();
    const double q = design_.q();

    if (nt == 1) {
        if (layout_.animal_effect) {
            const Eigen::VectorXd a_col = state.a.col(p0);
            double ss = a_col.dot(a_inv_ * a_col);
            state.G(p0, p0) = floored_scalar_variance(ss, priors_.nu0, priors_.s02, q,
                                                      "genetic variance", rng);
        }
        state.R(p0, p0) = floored_scalar_variance(residuals.col(0).squaredNorm(), priors_.nu0,
                                                  priors_.s02, n, "residual variance", rng);
    } else {
        const double df0 = nt + priors_.iw_df_margin;
        const Eigen::MatrixXd s0 =
            priors_.iw_scale * Eigen::MatrixXd::Identity(nt, nt);
        if (layout_.animal_effect) {
            const Eigen::MatrixXd a_block = state.a.middleCols(p0, nt);
            const Eigen::MatrixXd scatter = a_block.transpose() * (a_inv_ * a_block);
            state.G.block(p0, p0, nt, nt) = positive_definite_iw(
                df0 + q, s0 + scatter, rng, "genetic covariance (" + label + " group)");
        }
        state.R.block(p0, p0, nt, nt) =
            positive_definite_iw(df0 + n, s0 + residuals.transpose() * residuals, rng,
                                 "residual covariance (" + label + " group)");
    }
    if (layout_.tw_effect) {
        for (int t = 0; t < nt; ++t) {
            double ss = state.tw.col(p0 + t).squaredNorm();
            state.tw_var(p0 + t) =
                floored_scalar_variance(ss, priors_.nu0_tw, priors_.s02_tw,
                                        design_.n_tw(), "test-week variance", rng);
        }
    }
}

void GibbsSampler::sweep(FitState& state, Rng& rng) const {
    for (int b = 0; b < static_cast<int>(layout_.blocks.size()); ++b)
        sample_structural_block(state, b, rng);
    for (int g = 0; g < static_cast<int>(layout_.groups.size()); ++g)
        sample_location_group(state, g, rng);
    for (int g = 0; g < static_cast<int>(layout_.groups.size()); ++g)
        sample_variance_group(state, g, rng);
    ++state.iteration;
}

Eigen::MatrixXd GibbsSampler::simulate_responses(const FitState& state, Rng& rng) const {
    const int n = design_.n();
    Eigen::MatrixXd y = location_predictor(state);
    for (auto [p0, nt] : layout_.groups) {
        Eigen::LLT<Eigen::MatrixXd> llt(state.R.block(p0, p0, nt, nt));
        if (llt.info() != Eigen::Success)
            throw NumericalError("residual covariance not positive definite in simulation");
        const Eigen::MatrixXd root = llt.matrixL();
        for (int i = 0; i < n; ++i)
            y.row(i).segment(p0, nt) += (root * rng.gaussian_vector(nt)).transpose();
    }
    for (size_t b = 0; b < layout_.blocks.size(); ++b) {
        const auto& spec = layout_.blocks[b];
        for (size_t r = 0; r < spec.regressors.size(); ++r) {
            int eq = equation_of(spec.regressors[r]);
            if (eq >= 0)
                y.col(spec.equation) += state.coeffs[b](static_cast<int>(r)) * y.col(eq);
            else
                y.col(spec.equation) +=
                    state.coeffs[b](static_cast<int>(r)) * data_.col(spec.regressors[r]);
        }
    }
    return y;
}

void GibbsSampler::build_param_map() {
    auto add = [&](std::string name, std::function<double(const FitState&)> fn) {
        param_names_.push_back(std::move(name));
        param_fns_.push_back(std::move(fn));
    };
    auto label = [&](int p) -> const std::string& {
        return layout_.labels[static_cast<size_t>(p)];
    };

    for (size_t b = 0; b < layout_.blocks.size(); ++b) {
        const auto& spec = layout_.blocks[b];
        const bool intake_eq = label(spec.equation) == "rfi";
        for (size_t r = 0; r < spec.regressors.size(); ++r) {
            const std::string& reg = trait_names_.at(static_cast<size_t>(spec.regressors[r]));
            std::string name = intake_eq ? "lambda_" + reg
                                         : "b_" + label(spec.equation) + "_" + reg;
            add(std::move(name), [b, r](const FitState& s) {
                return s.coeffs[b](static_cast<int>(r));
            });
        }
    }
    if (layout_.intercept)
        for (int p = 0; p < layout_.m(); ++p)
            add("mu_" + label(p), [p](const FitState& s) { return s.mu(p); });

    for (auto [p0, nt] : layout_.groups) {
        if (nt == 1) {
            if (layout_.animal_effect)
                add("sigma2_a_" + label(p0),
                    [p0 = p0](const FitState& s) { return s.G(p0, p0); });
            add("sigma2_e_" + label(p0),
                [p0 = p0](const FitState& s) { return s.R(p0, p0); });
            if (layout_.tw_effect)
                add("sigma2_tw_" + label(p0),
                    [p0 = p0](const FitState& s) { return s.tw_var(p0); });
            if (layout_.animal_effect)
                add("h2_" + label(p0), [p0 = p0](const FitState& s) {
                    return heritability_rfi(s.G(p0, p0), s.R(p0, p0));
                });
        } else {
            if (layout_.animal_effect)
                for (int i = 0; i < nt; ++i)
                    for (int j = i; j < nt; ++j)
                        add("g_" + label(p0 + i) + "_" + label(p0 + j),
                            [p0 = p0, i, j](const FitState& s) {
                                return s.G(p0 + i, p0 + j);
                            });
            for (int i = 0; i < nt; ++i)
                for (int j = i; j < nt; ++j)
                    add("r_" + label(p0 + i) + "_" + label(p0 + j),
                        [p0 = p0, i, j](const FitState& s) { return s.R(p0 + i, p0 + j); });
            if (layout_.tw_effect)
                for (int i = 0; i < nt; ++i)
                    add("sigma2_tw_" + label(p0 + i),
                        [p0 = p0, i](const FitState& s) { return s.tw_var(p0 + i); });
            if (layout_.animal_effect) {
                for (int i = 0; i < nt; ++i)
                    add("h2_" + label(p0 + i), [p0 = p0, i](const FitState& s) {
                        return heritability_rfi(s.G(p0 + i, p0 + i), s.R(p0 + i, p0 + i));
                    });
                for (int i = 0; i < nt; ++i)
                    for (int j = i + 1; j < nt; ++j)
                        add("rg_" + label(p0 + i) + "_" + label(p0 + j),
                            [p0 = p0, i, j](const FitState& s) {
                                return s.G(p0 + i, p0 + j) /
                                       std::sqrt(s.G(p0 + i, p0 + i) * s.G(p0 + j, p0 + j));
                            });
            }
        }
    }

    if (layout_.intake_transform) {
        const std::string& intake =
            trait_names_.at(static_cast<size_t>(layout_.model_traits[0]));
        const auto [s0, ns] = layout_.groups.at(1);
        auto g_sink = [s0 = s0, ns = ns](const FitState& s) -> Eigen::MatrixXd {
            return s.G.block(s0, s0, ns, ns);
        };
        auto r_sink = [s0 = s0, ns = ns](const FitState& s) -> Eigen::MatrixXd {
            return s.R.block(s0, s0, ns, ns);
        };
        add("sigma2_a_" + intake, [g_sink](const FitState& s) {
            return s.G(0, 0) + delta_term(s.coeffs[0], g_sink(s));
        });
        add("sigma2_e_" + intake, [r_sink](const FitState& s) {
            return s.R(0, 0) + delta_term(s.coeffs[0], r_sink(s));
        });
        if (layout_.tw_effect)
            add("sigma2_tw_" + intake, [s0 = s0, ns = ns](const FitState& s) {
                Eigen::MatrixXd tw_sink =
                    s.tw_var.segment(s0, ns).asDiagonal().toDenseMatrix();
                return s.tw_var(0) + delta_term(s.coeffs[0], tw_sink);
            });
        add("h2_" + intake, [g_sink, r_sink](const FitState& s) {
            return heritability_dmi(s.G(0, 0), s.R(0, 0), delta_term(s.coeffs[0], g_sink(s)),
                                    delta_term(s.coeffs[0], r_sink(s)));
        });
        add("rg_" + intake + "_rfi", [g_sink](const FitState& s) {
            return genetic_correlation_dmi_rfi(s.coeffs[0], g_sink(s), s.G(0, 0));
        });
        for (int j = 0; j < ns; ++j) {
            const std::string& sink =
                trait_names_.at(static_cast<size_t>(layout_.model_traits[s0 + j]));
            add("rg_" + intake + "_" + sink, [g_sink, j](const FitState& s) {
                return genetic_correlation_dmi_sink(s.coeffs[0], g_sink(s), s.G(0, 0), j);
            });
        }
    }
}

Eigen::VectorXd GibbsSampler::extract_params(const FitState& state) const {
    Eigen::VectorXd out(static_cast<int>(param_fns_.size()));
    for (size_t p = 0; p < param_fns_.size(); ++p)
        out(static_cast<int>(p)) = param_fns_[p](state);
    return out;
}

GibbsSampler build_sampler(const ModelSpec& spec, const PhenotypeTable& standardized,
                           const Design& design, const Eigen::SparseMatrix<double>& a_inverse) {
    return GibbsSampler(ModelLayout::from_spec(spec, standardized.trait_names), standardized,
                        design, a_inverse, spec.priors);
}

ChainResult run_chain(const GibbsSampler& sampler, const McmcSpec& mcmc, int chain_index) {
    ChainResult out;
    out.chain_index = chain_index;
    out.param_names = sampler.param_names();
    const int n_params = static_cast<int>(out.param_names.size());
    const int m = sampler.layout().m();
    out.trace.resize(mcmc.length, n_params);
    out.samples.resize(mcmc.saved_per_chain(), n_params);
    out.gv_mean = Eigen::MatrixXd::Zero(sampler.q(), m);
    out.mu_mean = Eigen::VectorXd::Zero(m);
    const bool derive_rfi = sampler.layout().mt_full && sampler.layout().animal_effect;
    Eigen::VectorXd rfi_acc = Eigen::VectorXd::Zero(derive_rfi ? sampler.q() : 0);

    int saved = 0;
    Rng rng(mcmc.seed + static_cast<std::uint64_t>(chain_index));
    try {
        FitState state = sampler.make_state(rng, mcmc.random_init);
        out.beta_mean = Eigen::MatrixXd::Zero(state.beta.rows(), m);
        for (long iter = 1; iter <= mcmc.length; ++iter) {
            try {
                sampler.sweep(state, rng);
            } catch (const std::exception& e) {
                throw NumericalError("iteration " + std::to_string(iter) + ": " + e.what());
            }
            out.trace.row(iter - 1) = sampler.extract_params(state).transpose();
            if (iter > mcmc.burnin && (iter - mcmc.burnin) % mcmc.thin == 0) {
                out.samples.row(saved) = out.trace.row(iter - 1);
                out.saved_iterations.push_back(iter);
                out.gv_mean += state.a;
                out.mu_mean += state.mu;
                out.beta_mean += state.beta;
                if (derive_rfi) {
                    const Eigen::MatrixXd g_sink = state.G.block(1, 1, m - 1, m - 1);
                    const Eigen::VectorXd g_cross = state.G.block(0, 1, 1, m - 1).transpose();
                    const Eigen::VectorXd b = g_sink.llt().solve(g_cross);
                    rfi_acc += state.a.col(0) - state.a.rightCols(m - 1) * b;
                }
                ++saved;
            }
        }
    } catch (const std::exception& e) {
        out.error = "chain " + std::to_string(chain_index) + ": " + e.what();
        return out;
    }
    if (saved > 0) {
        out.gv_mean /= static_cast<double>(saved);
        out.mu_mean /= static_cast<double>(saved);
        out.beta_mean /= static_cast<double>(saved);
        if (derive_rfi) out.rfi_gv_mean = rfi_acc / static_cast<double>(saved);
    }
    return out;
}

std::vector<ChainResult> run_parallel(const GibbsSampler& sampler, const McmcSpec& mcmc,
                                      bool threaded) {
    mcmc.validate();
    std::vector<ChainResult> results(static_cast<size_t>(mcmc.chains));
    if (threaded && mcmc.chains > 1) {
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (;;) {
                int c = next.fetch_add(1);
                if (c >= mcmc.chains) return;
                results[static_cast<size_t>(c)] = run_chain(sampler, mcmc, c);
            }
        };
        unsigned n_workers = std::max(1u, std::thread::hardware_concurrency());
        n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(mcmc.chains));
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    } else {
        for (int c = 0; c < mcmc.chains; ++c)
            results[static_cast<size_t>(c)] = run_chain(sampler, mcmc, c);
    }
    int n_ok = 0;
    for (const auto& r : results) {
        if (r.ok())
            ++n_ok;
        else
            std::cerr << "warning: " << r.error << "\n";
    }
    if (n_ok == 0) throw NumericalError("all chains failed: " + results.front().error);
    return results;
}

}  // namespace rfi
