#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tenrank/approx.hpp"
#include "tenrank/classify.hpp"
#include "tenrank/geometry.hpp"
#include "tenrank/io.hpp"

namespace {

using nlohmann::json;
using namespace tenrank;

constexpr std::uint64_t kDefaultSeed = 12345;

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json triple_to_json(const std::array<Vec, 3>& t) {
    return json::array({vec_to_json(t[0]), vec_to_json(t[1]), vec_to_json(t[2])});
}

int cmd_classify(const std::string& file, double tol) {
    const DenseTensor t = read_tensor_file(file);
    const RankReport rep = classify_rank(t, tol);
    json out;
    out["delta"] = rep.delta;
    out["delta_hat"] = rep.delta_hat;
    out["mlrank"] = {rep.mlrank.r1, rep.mlrank.r2, rep.mlrank.r3};
    out["rank"] = rep.rank;
    out["border_rank"] = rep.border_rank;
    out["class_tag"] = to_string(rep.class_tag);
    std::cout << out.dump(2) << "\n";
    return 0;
}

Rank2Candidate random_init(const Shape& s, std::mt19937_64& rng, double sigma) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Rank2Candidate c;
    const int dims[3] = {s.n1, s.n2, s.n3};
    for (int m = 0; m < 3; ++m) {
        c.first[m] = Vec(dims[m]);
        c.second[m] = Vec(dims[m]);
        for (int i = 0; i < dims[m]; ++i) {
            c.first[m][i] = sigma * gauss(rng);
            c.second[m][i] = sigma * gauss(rng);
        }
    }
    return c;
}

int cmd_approximate(const std::string& file, int sweeps, std::uint64_t seed,
                    double tol, const std::string& trace_path) {
    const DenseTensor t = read_tensor_file(file);
    std::mt19937_64 rng(seed);
    const double sigma = std::cbrt(frobenius_norm(t) / 3.0 + 1e-300);

    // Short pilot runs pick the best of a few random starts.
    Rank2Candidate init = random_init(t.shape(), rng, sigma);
    double best_err = std::numeric_limits<double>::infinity();
    Rank2Candidate best_init = init;
    for (int r = 0; r < 8; ++r) {
        Rank2Candidate c = r == 0 ? init : random_init(t.shape(), rng, sigma);
        auto [cand, tr] = als_rank2(t, c, 10, 0.0);
        if (!tr.rows.empty() && tr.rows.back().error < best_err) {
            best_err = tr.rows.back().error;
            best_init = c;
        }
    }
    const double initial_norm = best_init.factor_norm_max();

    auto [cand, trace] = als_rank2(t, best_init, sweeps, tol);
    if (!trace_path.empty()) {
        write_trace_file(trace_path, trace);
    }
    if (trace.rows.empty() || !std::isfinite(trace.rows.back().error)) {
        throw NumericalStall("alternating least squares produced a non-finite error");
    }
    const AlsTrace::Row& last = trace.rows.back();
    json out;
    out["final_error"] = last.error;
    out["sweeps_run"] = last.iteration;
    out["converged"] = trace.converged;
    out["factor_norm_max"] = last.factor_norm_max;
    out["initial_factor_norm_max"] = initial_norm;
    out["delta_candidate"] = last.delta_candidate;
    out["proj_residual"] = last.proj_residual;
    out["candidate"] = {{"first", triple_to_json(cand.first)},
                        {"second", triple_to_json(cand.second)}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_improve(const std::string& file, const std::string& candidate_path,
                const std::string& out_path) {
    const DenseTensor t = read_tensor_file(file);
    const Rank2Candidate c = read_candidate_file(candidate_path);
    const ImprovementOutcome o = improve_candidate(t, c);
    write_candidate_file(out_path, o.new_candidate);
    json out;
    out["case"] = to_string(o.case_taken);
    out["epsilon"] = o.epsilon;
    out["predicted_decrease"] = o.predicted_decrease;
    out["achieved"] = o.achieved;
    out["old_error"] = frobenius_norm(sub(t, c.dense()));
    out["new_error"] = frobenius_norm(sub(t, o.new_candidate.dense()));
    out["escape_n"] = o.escape_n;
    out["output"] = out_path;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_border_demo(long long n_max, const std::string& out_path) {
    if (n_max < 1) throw Error("border-demo: --n-max must be >= 1");
    TangentForm w;
    Vec e0(2), e1(2);
    e0 << 1, 0;
    e1 << 0, 1;
    w.base = {e0, e0, e0};
    w.offset = {e1, e1, e1};
    const auto [c1, c2] = border_bound_constants(w);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw Error("cannot write file: " + out_path);
        out = &file;
    }
    out->precision(17);
    *out << "n,value,bound\n";
    for (long long decade = 1; decade <= n_max; decade *= 10) {
        for (int mant = 1; mant <= 9; ++mant) {
            const long long n = decade * mant;
            if (n > n_max) break;
            const double value = frobenius_norm(border_residual(w, n));
            const double bound = c1 / static_cast<double>(n) +
                                 c2 / (static_cast<double>(n) * static_cast<double>(n));
            *out << n << ',' << value << ',' << bound << '\n';
        }
    }
    return 0;
}

int cmd_distance(const std::string& file, int restarts, std::uint64_t seed) {
    const DenseTensor t = read_tensor_file(file);
    const BoundaryResult r = boundary_distance(t, restarts, seed);
    json out;
    out["distance"] = r.distance;
    out["delta_nearest"] = r.delta_nearest;
    out["class_tag"] = to_string(r.class_tag);
    out["nearest"] = {{"base", triple_to_json(r.nearest.base)},
                      {"offset", triple_to_json(r.nearest.offset)}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_sample(long long count, std::uint64_t seed, double tol) {
    if (count < 1) throw CLI::ValidationError("--count must be >= 1");
    long long neg = 0, pos = 0, near = 0;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (long long i = 0; i < count; ++i) {
        DenseTensor t(Shape(2, 2, 2));
        for (double& c : t.coeffs()) c = gauss(rng);
        const double norm = frobenius_norm(t);
        const double dh = hyperdeterminant(t) / (norm * norm * norm * norm);
        if (dh > tol) {
            ++pos;
        } else if (dh < -tol) {
            ++neg;
        } else {
            ++near;
        }
    }
    json out;
    out["count"] = count;
    out["seed"] = seed;
    out["frac_delta_neg"] = static_cast<double>(neg) / static_cast<double>(count);
    out["frac_delta_pos"] = static_cast<double>(pos) / static_cast<double>(count);
    out["frac_near_zero"] = static_cast<double>(near) / static_cast<double>(count);
    std::cout << out.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rank classification and rank-two approximation of real 2x2x2 tensors"};
    app.require_subcommand(1);

    std::string file, candidate_path, trace_path, out_path;
    int sweeps = 500;
    int restarts = 16;
    long long n_max = 1000000;
    long long count = 10000;
    std::uint64_t seed = kDefaultSeed;
    double tol = kDefaultDeltaTol;
    double als_tol = 0.0;

    auto* classify = app.add_subcommand("classify", "Rank report for a tensor file");
    classify->add_option("file", file)->required();
    classify->add_option("--tol", tol, "relative hyperdeterminant tolerance");

    auto* approx = app.add_subcommand("approximate", "Rank-two alternating least squares");
    approx->add_option("file", file)->required();
    approx->add_option("--sweeps", sweeps);
    approx->add_option("--seed", seed);
    approx->add_option("--tol", als_tol, "stop when the per-sweep decrease falls below tol*||t||");
    approx->add_option("--trace", trace_path, "per-sweep CSV output path");

    auto* improve = app.add_subcommand("improve", "Strictly improve a rank-two candidate");
    improve->add_option("file", file)->required();
    improve->add_option("--candidate", candidate_path)->required();
    improve->add_option("--out", out_path)->default_val("improved.json");

    auto* border = app.add_subcommand("border-demo", "Border sequence error and bound table");
    border->add_option("--n-max", n_max);
    border->add_option("--out", out_path);

    auto* distance = app.add_subcommand("distance", "Distance to the tangential variety");
    distance->add_option("file", file)->required();
    distance->add_option("--restarts", restarts);
    distance->add_option("--seed", seed);

    auto* sample = app.add_subcommand("sample", "Hyperdeterminant sign statistics of random tensors");
    sample->add_option("--count", count);
    sample->add_option("--seed", seed);
    sample->add_option("--tol", tol);

    try {
        app.parse(argc, argv);
        if (classify->parsed()) return cmd_classify(file, tol);
        if (approx->parsed())
            return cmd_approximate(file, sweeps, seed, als_tol, trace_path);
        if (improve->parsed()) return cmd_improve(file, candidate_path, out_path);
        if (border->parsed()) return cmd_border_demo(n_max, out_path);
        if (distance->parsed()) return cmd_distance(file, restarts, seed);
        if (sample->parsed()) return cmd_sample(count, seed, tol);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalStall& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
