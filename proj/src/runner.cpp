#include "stormcells/runner.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <map>

#include <fmt/format.h>

#include "stormcells/geometry_oracles.hpp"
#include "stormcells/output.hpp"
#include "stormcells/theory.hpp"

namespace stormcells {

namespace {

// Per-replicate state, built lazily by whichever probe asks first. Lives
// inside one worker only.
class Replicate {
  public:
    Replicate(const SimulationPlan& plan, std::size_t r) : plan_(plan), r_(r) {}

    const Realization& realization()
    {
        if (!real_)
            real_ = plan_.realize(r_);
        return *real_;
    }
    const Tessellation& tessellation()
    {
        if (!tess_)
            tess_ = extract_tessellation(realization());
        return *tess_;
    }
    const std::vector<double>& spectral()
    {
        if (!Y_)
            Y_ = plan_.spectral_draw(r_);
        return *Y_;
    }
    const std::vector<double>& independent_eta()
    {
        if (!ind_)
            ind_ = plan_.realize_independent(r_).eta;
        return *ind_;
    }
    const SimulationPlan& plan() const { return plan_; }

  private:
    const SimulationPlan& plan_;
    std::size_t r_;
    std::optional<Realization> real_;
    std::optional<Tessellation> tess_;
    std::optional<std::vector<double>> Y_;
    std::optional<std::vector<double>> ind_;
};

using Probe = std::function<double(Replicate&)>;

struct Pass {
    SimulationPlan plan;
    std::vector<std::size_t> limits;  // probe i runs on replicates r < limits[i]
    std::vector<Probe> probes;
    std::vector<std::vector<double>> values;
    std::size_t rasters = 0;
    std::vector<RasterImage> images;
};

struct Handle {
    std::size_t pass = 0;
    std::size_t probe = 0;
};

class Registry {
  public:
    Registry(const ExperimentConfig& cfg, const SpectralModel& model, Execution exec)
        : cfg_(cfg), model_(model), exec_(exec)
    {
    }

    std::size_t pass_for(int half_width)
    {
        if (auto it = index_.find(half_width); it != index_.end())
            return it->second;
        const GridWindow w = build_window(cfg_, half_width);
        SimulationPlan plan = make_plan(model_, w, cfg_.seed, cfg_.backend);
        plan.substream = 4u * static_cast<std::uint32_t>(half_width);
        // Workers own whole replicates; kernels inside a replicate stay serial.
        plan.execution = Execution::Serial;
        passes_.push_back(Pass{std::move(plan), {}, {}, {}, 0, {}});
        index_[half_width] = passes_.size() - 1;
        return passes_.size() - 1;
    }

    Handle add(int half_width, std::size_t n, Probe p)
    {
        const std::size_t i = pass_for(half_width);
        passes_[i].limits.push_back(n);
        passes_[i].probes.push_back(std::move(p));
        return Handle{i, passes_[i].probes.size() - 1};
    }

    const SimulationPlan& plan(int half_width) { return passes_[pass_for(half_width)].plan; }
    SimulationPlan& mutable_plan(int half_width) { return passes_[pass_for(half_width)].plan; }
    void request_rasters(int half_width, std::size_t count)
    {
        passes_[pass_for(half_width)].rasters = count;
    }

    void run()
    {
        for (Pass& pass : passes_)
            run_pass(pass);
    }

    const std::vector<double>& values(Handle h) const { return passes_[h.pass].values[h.probe]; }
    std::vector<RasterImage> images() const
    {
        std::vector<RasterImage> out;
        for (const Pass& p : passes_)
            out.insert(out.end(), p.images.begin(), p.images.end());
        return out;
    }

  private:
    void run_pass(Pass& pass)
    {
        std::size_t total = pass.rasters;
        for (std::size_t n : pass.limits)
            total = std::max(total, n);
        const std::size_t k = pass.probes.size();
        std::vector<std::vector<double>> rows(total);
        std::vector<std::optional<std::vector<StormId>>> labels(pass.rasters);
        for_each_replicate(
            total,
            [&](std::size_t r) {
                Replicate rep(pass.plan, r);
                std::vector<double> obs(k, 0.0);
                for (std::size_t i = 0; i < k; ++i)
                    if (r < pass.limits[i])
                        obs[i] = pass.probes[i](rep);
                if (r < pass.rasters)
                    labels[r] = rep.realization().labels;
                rows[r] = std::move(obs);
            },
            exec_);
        pass.values.assign(k, {});
        for (std::size_t i = 0; i < k; ++i) {
            pass.values[i].reserve(pass.limits[i]);
            for (std::size_t r = 0; r < pass.limits[i]; ++r)
                pass.values[i].push_back(rows[r][i]);
        }
        for (std::size_t r = 0; r < pass.rasters; ++r)
            pass.images.push_back(RasterImage{r, pass.plan.window, std::move(*labels[r])});
    }

    const ExperimentConfig& cfg_;
    const SpectralModel& model_;
    Execution exec_;
    std::vector<Pass> passes_;
    std::map<int, std::size_t> index_;
};

std::string lag_text(const Coord& c, int dim)
{
    std::string s;
    for (int a = 0; a < dim; ++a) {
        if (a)
            s += ' ';
        s += std::to_string(c[static_cast<std::size_t>(a)]);
    }
    return s;
}

std::string number_text(double v)
{
    return fmt::format("{:.10g}", v);
}

ResultRow mean_row(const std::string& estimator, const std::string& param, const std::string& value,
                   const std::vector<double>& values, double scale = 1.0)
{
    const MeanAccumulator acc = accumulate(values);
    ResultRow row;
    row.estimator = estimator;
    row.param = param;
    row.value = value;
    row.estimate = scale * acc.mean();
    row.std_error = scale * acc.std_error_of_mean();
    row.n = acc.n;
    return row;
}

ResultRow theta_row(const std::string& value, const std::vector<double>& inv_max,
                    const SpectralModel& model, const GridWindow& w, const Coord& h)
{
    const EstimatorReport rep = theta_from_inverse_max(inv_max);
    ResultRow row{"theta_hat", "lag", value, rep.estimate, rep.std_error, rep.replicates, {}, {}};
    if (auto t = theta_analytic(model, physical_lag(w, h))) {
        row.reference = *t;
        row.reference_kind = ReferenceKind::Analytic;
    }
    return row;
}

using Finisher = std::function<TaskResult(const Registry&)>;

Finisher plan_task(const TaskSpec& t, const ExperimentConfig& cfg, const SpectralModel& model,
                   Registry& reg)
{
    const int R = cfg.half_width;
    const int d = cfg.dim;
    const std::size_t n = t.replicates;
    const GridWindow w = build_window(cfg, R);
    const Site o = w.origin();

    switch (t.kind) {
    case TaskKind::Margins: {
        std::vector<Handle> hs;
        for (double z : t.z)
            hs.push_back(reg.add(R, n, [o, z](Replicate& rep) {
                return rep.realization().eta[o] <= z ? 1.0 : 0.0;
            }));
        return [t, hs, n](const Registry& r) {
            TaskResult out{t.kind, n, {}, {}};
            double worst = 0.0;
            for (std::size_t i = 0; i < hs.size(); ++i) {
                ResultRow row = mean_row("ecdf", "z", number_text(t.z[i]), r.values(hs[i]));
                row.reference = std::exp(-1.0 / t.z[i]);
                row.reference_kind = ReferenceKind::Analytic;
                worst = std::max(worst, std::abs(row.estimate - *row.reference));
                out.rows.push_back(row);
            }
            // DKW band at level 0.999: P[sup |F_n - F| > eps] <= 2 exp(-2 n eps^2).
            const double eps = std::sqrt(std::log(2.0 / 0.001) / (2.0 * static_cast<double>(n)));
            out.rows.push_back(ResultRow{"ecdf_max_deviation", "band", "dkw_0.999", worst, 0.0, n, eps,
                                         ReferenceKind::Analytic});
            return out;
        };
    }
    case TaskKind::ThetaGrid: {
        std::vector<Handle> hs;
        for (const Coord& h : t.lags) {
            const Site y = shifted_site(w, o, h);
            hs.push_back(reg.add(R, n, [o, y](Replicate& rep) {
                return inverse_max(rep.realization().eta, o, y);
            }));
        }
        return [t, hs, n, d, w, model](const Registry& r) {
            TaskResult out{t.kind, n, {}, {}};
            for (std::size_t i = 0; i < hs.size(); ++i)
                out.rows.push_back(theta_row(lag_text(t.lags[i], d), r.values(hs[i]), model, w, t.lags[i]));
            return out;
        };
    }
    case TaskKind::PiGrid: {
        struct Lag {
            Handle pi, pi_formula, theta;
        };
        std::vector<Lag> hs;
        for (const Coord& h : t.lags) {
            const Site y = shifted_site(w, o, h);
            Lag l;
            l.pi = reg.add(R, n, [o, y](Replicate& rep) {
                const auto& lab = rep.realization().labels;
                return lab[o] == lab[y] ? 1.0 : 0.0;
            });
            l.theta = reg.add(R, n, [o, y](Replicate& rep) {
                return inverse_max(rep.realization().eta, o, y);
            });
            if (t.formula) {
                const SiteSet K(w, {y});
                l.pi_formula = reg.add(R, n, [o, K](Replicate& rep) {
                    return coverage_term(rep.spectral(), rep.independent_eta(), o, K);
                });
            }
            hs.push_back(l);
        }
        return [t, hs, n, d, w, model](const Registry& r) {
            TaskResult out{t.kind, n, {}, {}};
            for (std::size_t i = 0; i < hs.size(); ++i) {
                const std::string lag = lag_text(t.lags[i], d);
                const ResultRow pi = mean_row("pi_empirical", "lag", lag, r.values(hs[i].pi));
                const ResultRow th = theta_row(lag, r.values(hs[i].theta), model, w, t.lags[i]);
                out.rows.push_back(pi);
                if (t.formula) {
                    ResultRow f = mean_row("pi_formula", "lag", lag, r.values(hs[i].pi_formula));
                    f.reference = pi.estimate;
                    f.reference_kind = ReferenceKind::Oracle;
                    out.rows.push_back(f);
                }
                out.rows.push_back(th);
                EstimatorReport pr, tr;
                pr.estimate = pi.estimate;
                pr.std_error = pi.std_error;
                tr.estimate = th.estimate;
                tr.std_error = th.std_error;
                const ComparisonResult c = comparison_check(pr, tr);
                out.rows.push_back(ResultRow{"comparison_lower_slack", "lag", lag, c.lower_slack,
                                             c.lower_margin / 3.0, n, {}, {}});
                out.rows.push_back(ResultRow{"comparison_upper_slack", "lag", lag, c.upper_slack,
                                             c.upper_margin / 3.0, n, {}, {}});
                out.rows.push_back(ResultRow{"comparison_pass", "lag", lag, c.pass ? 1.0 : 0.0, 0.0, n,
                                             {}, {}});
            }
            return out;
        };
    }
    case TaskKind::Coverage: {
        const Site x = shifted_site(w, o, t.x);
        std::vector<std::pair<Handle, Handle>> hs;
        for (const auto& lags : t.sets) {
            std::vector<Site> members;
            for (const Coord& h : lags)
                members.push_back(shifted_site(w, x, h));
            const SiteSet K(w, members);
            Handle e = reg.add(R, n, [x, K](Replicate& rep) {
                return covers(rep.tessellation(), x, K) ? 1.0 : 0.0;
            });
            Handle f{};
            if (t.formula)
                f = reg.add(R, n, [x, K](Replicate& rep) {
                    return coverage_term(rep.spectral(), rep.independent_eta(), x, K);
                });
            hs.emplace_back(e, f);
        }
        return [t, hs, n, d](const Registry& r) {
            TaskResult out{t.kind, n, {}, {}};
            for (std::size_t i = 0; i < hs.size(); ++i) {
                std::string K;
                for (const Coord& h : t.sets[i])
                    K += (K.empty() ? "" : ";") + lag_text(h, d);
                const ResultRow e = mean_row("coverage_empirical", "K", K, r.values(hs[i].first));
                out.rows.push_back(e);
                if (t.formula) {
                    ResultRow f = mean_row("coverage_formula", "K", K, r.values(hs[i].second));
                    f.reference = e.estimate;
                    f.reference_kind = ReferenceKind::Oracle;
                    out.rows.push_back(f);
                }
            }
            return out;
        };
    }
    case TaskKind::Containment: {
        const Site x = shifted_site(w, o, t.x);
        std::vector<std::pair<Handle, Handle>> hs;
        for (int radius : t.radii) {
            const SiteSet K = box_sites(w, radius);
            Handle e = reg.add(R, n, [x, K](Replicate& rep) {
                return contained_in(rep.tessellation(), x, K) ? 1.0 : 0.0;
            });
            Handle f{};
            if (t.formula)
                f = reg.add(R, n, [x, K](Replicate& rep) {
                    return containment_term(rep.spectral(), rep.independent_eta(), x, K);
                });
            hs.emplace_back(e, f);
        }
        return [t, hs, n](const Registry& r) {
            TaskResult out{t.kind, n, {}, {}};
            for (std::size_t i = 0; i < hs.size(); ++i) {
                const std::string rv = std::to_string(t.radii[i]);
                const ResultRow e = mean_row("containment_empirical", "r", rv, r.values(hs[i].first));
                out.rows.push_back(e);
                if (t.formula) {
                    ResultRow f = mean_row("containment_formula", "r", rv, r.values(hs[i].second));
                    f.reference = e.estimate;
                    f.reference_kind = ReferenceKind::Oracle;
                    out.rows.push_back(f);
                }
            }
            return out;
        };
    }
    case TaskKind::Volume: {
        std::vector<std::pair<Handle, Handle>> hs;
        for (int hw : t.half_widths) {
            const GridWindow wr = build_window(cfg, hw);
            const Site x = wr.origin();
            const double cm = wr.cell_measure();
            Handle e = reg.add(hw, n, [x](Replicate& rep) {
                const Tessellation& tess = rep.tessellation();
                return cell_stats(tess, tess.labels[x]).volume;
            });
            Handle f{};
            if (t.formula)
                f = reg.add(hw, n, [x, cm](Replicate& rep) {
                    return volume_term(rep.spectral(), rep.independent_eta(), x, cm);
                });
            hs.emplace_back(e, f);
        }
        return [t, hs, n](const Registry& r) {
            TaskResult out{t.kind, n, {}, {}};
            for (std::size_t i = 0; i < hs.size(); ++i) {
                const std::string rv = std::to_string(t.half_widths[i]);
                const ResultRow e = mean_row("volume_empirical", "R", rv, r.values(hs[i].first));
                out.rows.push_back(e);
                if (t.formula) {
                    ResultRow f = mean_row("volume_formula", "R", rv, r.values(hs[i].second));
                    f.reference = e.estimate;
                    f.reference_kind = ReferenceKind::Oracle;
                    out.rows.push_back(f);
                }
            }
            return out;
        };
    }
    case TaskKind::Boundedness: {
        const bool composite = model.kind() == ModelKind::Composite;
        struct Sweep {
            Handle touch, formula, cons, symdiff;
        };
        std::vector<Sweep> hs;
        for (int hw : t.half_widths) {
            const GridWindow wr = build_window(cfg, hw);
            const Site x = wr.origin();
            Sweep s;
            s.touch = reg.add(hw, n, [](Replicate& rep) {
                return origin_cell_touches_boundary(rep.tessellation()) ? 1.0 : 0.0;
            });
            if (t.formula) {
                const int inner = static_cast<int>(t.inner_fraction * hw);
                const SiteSet annulus = annulus_sites(wr, x, inner);
                s.formula = reg.add(hw, n, [x, annulus](Replicate& rep) {
                    return bounded_term(rep.spectral(), rep.independent_eta(), x, annulus);
                });
            }
            if (composite) {
                s.cons = reg.add(hw, n, [x](Replicate& rep) {
                    return conservative_wins(rep.realization(), x) ? 1.0 : 0.0;
                });
                s.symdiff = reg.add(hw, n, [x](Replicate& rep) {
                    const bool touch = origin_cell_touches_boundary(rep.tessellation());
                    return touch != conservative_wins(rep.realization(), x) ? 1.0 : 0.0;
                });
            }
            hs.push_back(s);
        }
        return [t, hs, n, composite](const Registry& r) {
            TaskResult out{t.kind, n, {}, {}};
            for (std::size_t i = 0; i < hs.size(); ++i) {
                const std::string rv = std::to_string(t.half_widths[i]);
                out.rows.push_back(mean_row("touch_fraction", "R", rv, r.values(hs[i].touch)));
                if (t.formula)
                    out.rows.push_back(mean_row("bounded_formula", "R", rv, r.values(hs[i].formula)));
                if (composite) {
                    out.rows.push_back(mean_row("conservative_wins", "R", rv, r.values(hs[i].cons)));
                    out.rows.push_back(
                        mean_row("symmetric_difference", "R", rv, r.values(hs[i].symdiff)));
                }
            }
            return out;
        };
    }
    case TaskKind::Density: {
        std::vector<Handle> hs;
        for (int radius : t.radii)
            hs.push_back(reg.add(R, n, [o, radius](Replicate& rep) {
                return density_profile(rep.tessellation(), o, {radius}).values[0];
            }));
        return [t, hs, n](const Registry& r) {
            TaskResult out{t.kind, n, {}, {}};
            for (std::size_t i = 0; i < hs.size(); ++i)
                out.rows.push_back(
                    mean_row("density_mean", "r", std::to_string(t.radii[i]), r.values(hs[i])));
            const auto& last = r.values(hs.back());
            std::vector<double> above;
            for (double v : last)
                above.push_back(v > t.floor ? 1.0 : 0.0);
            out.rows.push_back(mean_row("floor_fraction", "r", std::to_string(t.radii.back()), above));
            out.rows.back().reference = t.floor;
            out.rows.back().reference_kind = ReferenceKind::None;
            return out;
        };
    }
    case TaskKind::BetaBound: {
        const SiteSet S(w, {o});
        std::vector<Handle> hs;
        for (double dist : t.distances) {
            const SiteSet far = distant_sites(w, S, dist);
            hs.push_back(reg.add(R, n, [S, far](Replicate& rep) {
                return links(rep.tessellation(), S, far) ? 1.0 : 0.0;
            }));
        }
        return [t, hs, n](const Registry& r) {
            TaskResult out{t.kind, n, {}, {}};
            for (std::size_t i = 0; i < hs.size(); ++i)
                out.rows.push_back(
                    mean_row("beta_bound", "r", number_text(t.distances[i]), r.values(hs[i]), 2.0));
            return out;
        };
    }
    case TaskKind::OracleCheck: {
        const std::string oracle =
            model.kind() == ModelKind::SmithGauss ? "laguerre" : "johnson_mehl";
        if (t.strict)
            reg.mutable_plan(R).options.log_candidates = true;
        Handle retained = reg.add(R, n, [model](Replicate& rep) {
            const Realization& real = rep.realization();
            const auto lab = oracle_storm_labels(model, real.window, real.storms, Execution::Serial);
            return static_cast<double>(label_agreement(real.window, real.labels, lab).mismatches);
        });
        Handle strict{};
        if (t.strict)
            strict = reg.add(R, n, [model](Replicate& rep) {
                const Realization& real = rep.realization();
                const auto lab =
                    oracle_storm_labels(model, real.window, real.candidate_log, Execution::Serial);
                return static_cast<double>(label_agreement(real.window, real.labels, lab).mismatches);
            });
        return [t, retained, strict, n, oracle](const Registry& r) {
            TaskResult out{t.kind, n, {}, {}};
            auto total = [](const std::vector<double>& v) {
                double s = 0.0;
                for (double x : v)
                    s += x;
                return s;
            };
            auto affected = [](const std::vector<double>& v) {
                std::vector<double> o;
                for (double x : v)
                    o.push_back(x > 0.0 ? 1.0 : 0.0);
                return o;
            };
            const double m = total(r.values(retained));
            out.rows.push_back(ResultRow{oracle + "_mismatches", "storms", "retained", m, 0.0, n, 0.0,
                                         ReferenceKind::Oracle});
            out.rows.push_back(mean_row(oracle + "_mismatch_fraction", "storms", "retained",
                                        affected(r.values(retained))));
            std::string report = fmt::format("{} mismatches: {}\n", oracle, m);
            report += fmt::format("replicates: {}\n", n);
            if (t.strict) {
                const double ms = total(r.values(strict));
                out.rows.push_back(ResultRow{oracle + "_mismatches", "storms", "all_generated", ms, 0.0,
                                             n, 0.0, ReferenceKind::Oracle});
                report += fmt::format("{} mismatches (strict, all generated storms): {}\n", oracle, ms);
            }
            out.reports.emplace_back("oracle_check.txt", report);
            return out;
        };
    }
    }
    throw std::logic_error("unhandled task kind");
}

}  // namespace

ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& opts)
{
    if (opts.out)
        cfg.out = *opts.out;
    if (opts.seed)
        cfg.seed = *opts.seed;
    if (opts.strict_oracle)
        for (TaskSpec& t : cfg.tasks)
            if (t.kind == TaskKind::OracleCheck)
                t.strict = true;
    return cfg;
}

RunResults execute_tasks(const ExperimentConfig& cfg, Execution exec)
{
    const SpectralModel model = build_model(cfg);
    Registry reg(cfg, model, exec);
    std::vector<std::pair<TaskKind, Finisher>> finishers;
    for (const TaskSpec& t : cfg.tasks) {
        try {
            finishers.emplace_back(t.kind, plan_task(t, cfg, model, reg));
        } catch (const std::exception& e) {
            throw TaskFailure(to_string(t.kind), e.what());
        }
    }
    if (cfg.rasters > 0)
        reg.request_rasters(cfg.half_width, cfg.rasters);
    try {
        reg.run();
    } catch (const TaskFailure&) {
        throw;
    } catch (const std::exception& e) {
        throw TaskFailure("simulation", e.what());
    }
    RunResults out;
    for (auto& [kind, finish] : finishers) {
        try {
            out.tasks.push_back(finish(reg));
        } catch (const std::exception& e) {
            throw TaskFailure(to_string(kind), e.what());
        }
    }
    out.rasters = reg.images();
    return out;
}

RunManifest run_experiment(const ExperimentConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    const std::filesystem::path dir(cfg.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error(fmt::format("cannot create output directory '{}': {}", dir.string(),
                                             ec.message()));
    std::filesystem::remove(dir / "manifest.txt", ec);
    std::filesystem::remove(dir / "MANIFEST.partial", ec);
    RunResults results;
    try {
        results = execute_tasks(cfg);
    } catch (const std::exception& e) {
        write_partial_marker(dir, cfg, e.what());
        throw;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return write_outputs(dir, cfg, results, secs);
}

}  // namespace stormcells
