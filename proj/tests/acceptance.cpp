// Acceptance suite: end-to-end checks of the simulator against its
// closed-form oracles, the neural machinery against finite differences,
// and the learning/trend behavior of the three access policies at desk
// scale. One summary line per criterion.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "csra/analytics.hpp"
#include "csra/engine.hpp"
#include "csra/mc.hpp"
#include "csra/mlp.hpp"
#include "csra/policy.hpp"
#include "csra/sweep.hpp"

using namespace csra;
namespace fs = std::filesystem;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(int criterion, bool pass, const std::string& detail) {
    std::cout << "[criterion " << criterion << "] " << (pass ? "PASS" : "FAIL") << " — "
              << detail << "\n"
              << std::flush;
}

PsiMatrix random_psi(int K, int M, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PsiMatrix psi(K, M);
    for (int n = 0; n < K; ++n) {
        double sum = 0.0;
        std::vector<double> row(num_configs(M));
        for (auto& x : row) {
            x = u(rng) + 1e-3;
            sum += x;
        }
        for (ConfigIndex c = 0; c < num_configs(M); ++c) psi.at(n, c) = row[c] / sum;
    }
    return psi;
}

int workers() {
    return std::max(2u, std::thread::hardware_concurrency());
}

}  // namespace

TEST_CASE("criterion 1: collision-channel oracle equivalence", "[acceptance]") {
    Timer timer;
    auto inst_rng = make_stream(20250801, Stream::Placement);
    std::uniform_int_distribution<int> pick_k(1, 4), pick_m(1, 3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    const long slots = 1000000;
    for (int i = 0; i < 20; ++i) {
        const int K = pick_k(inst_rng), M = pick_m(inst_rng);
        const double p_act = 0.1 + 0.8 * u(inst_rng);
        const PsiMatrix psi = random_psi(K, M, inst_rng);
        const double formula = success_prob(psi, p_act);
        auto mc_rng = make_stream(777 + static_cast<std::uint64_t>(i), Stream::Noise);
        const double mc = mc_success_prob(psi, p_act, slots, mc_rng);
        worst = std::max(worst, std::abs(formula - mc));
    }
    const double elapsed = timer.seconds();
    const bool pass = worst <= 0.01 && elapsed < 120.0;
    std::ostringstream os;
    os << "max |sim - formula| = " << worst << " over 20 instances x 1e6 slots (tol 0.01), "
       << elapsed << " s (budget 120 s)";
    report(1, pass, os.str());
    CHECK(worst <= 0.01);
    CHECK(elapsed < 120.0);
}

TEST_CASE("criterion 2: queueing formulas", "[acceptance]") {
    double worst_pd = 0.0, worst_q = 0.0;
    for (double p_arr : {0.1, 0.2}) {
        for (double lambda : {0.4, 0.6}) {
            auto rng = make_stream(static_cast<std::uint64_t>(p_arr * 1000 + lambda * 10),
                                   Stream::Arrivals);
            const auto sim = mc_queue_sim(p_arr, lambda, 20, 1000000, rng);
            const auto st = queue_steady_state(p_arr, lambda);
            worst_pd = std::max(worst_pd,
                                std::abs(sim.p_violation - deadline_violation(p_arr, lambda, 20)));
            worst_q = std::max({worst_q, std::abs(sim.q0_frac - st.q0),
                                std::abs(sim.q1_frac - st.q1)});
        }
    }
    const bool pass = worst_pd <= 0.02 && worst_q <= 0.01;
    std::ostringstream os;
    os << "max |P_D error| = " << worst_pd << " (tol 0.02), max |Q0/Q1 error| = " << worst_q
       << " (tol 0.01), 4 combos x 1e6 updates";
    report(2, pass, os.str());
    CHECK(worst_pd <= 0.02);
    CHECK(worst_q <= 0.01);
}

namespace {

double batch_loss(const Mlp& net, const std::vector<ReplayTuple>& batch) {
    double loss = 0.0;
    for (const auto& t : batch) {
        const double err = net.forward(t.features)(static_cast<Eigen::Index>(t.action)) - t.reward;
        loss += err * err;
    }
    return loss / static_cast<double>(batch.size());
}

double worst_grad_error(Mlp net, const std::vector<ReplayTuple>& batch) {
    std::vector<const ReplayTuple*> view;
    for (const auto& t : batch) view.push_back(&t);
    const LossAndGrad lg = loss_and_grad(net, view);
    const double h = 1e-5;
    double worst = 0.0;
    auto probe_matrix = [&](Eigen::MatrixXd& w, const Eigen::MatrixXd& g) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
            for (Eigen::Index r = 0; r < w.rows(); ++r) {
                const double keep = w(r, c);
                w(r, c) = keep + h;
                const double up = batch_loss(net, batch);
                w(r, c) = keep - h;
                const double dn = batch_loss(net, batch);
                w(r, c) = keep;
                const double fd = (up - dn) / (2.0 * h);
                const double denom = std::max({std::abs(fd), std::abs(g(r, c)), 1e-6});
                worst = std::max(worst, std::abs(fd - g(r, c)) / denom);
            }
        }
    };
    probe_matrix(net.w1, lg.grads.w1);
    probe_matrix(net.w2, lg.grads.w2);
    probe_matrix(net.w3, lg.grads.w3);
    // biases via the same probe, wrapped as single-column matrices
    auto probe_bias = [&](Eigen::VectorXd& b, const Eigen::VectorXd& g) {
        for (Eigen::Index r = 0; r < b.size(); ++r) {
            const double keep = b(r);
            b(r) = keep + h;
            const double up = batch_loss(net, batch);
            b(r) = keep - h;
            const double dn = batch_loss(net, batch);
            b(r) = keep;
            const double fd = (up - dn) / (2.0 * h);
            const double denom = std::max({std::abs(fd), std::abs(g(r)), 1e-6});
            worst = std::max(worst, std::abs(fd - g(r)) / denom);
        }
    };
    probe_bias(net.b1, lg.grads.b1);
    probe_bias(net.b2, lg.grads.b2);
    probe_bias(net.b3, lg.grads.b3);
    return worst;
}

}  // namespace

TEST_CASE("criterion 3: neural correctness", "[acceptance]") {
    // Every gradient entry against central finite differences.
    auto rng = make_stream(333, Stream::Init);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const int M = 1 + trial % 3;
        Mlp net = Mlp::init(2 * M, 6 + trial, 1 << M, rng);
        std::vector<ReplayTuple> batch;
        std::uniform_int_distribution<ConfigIndex> ua(0, static_cast<ConfigIndex>((1 << M) - 1));
        for (int j = 0; j < 5; ++j) {
            ReplayTuple t;
            t.features = Eigen::VectorXd::NullaryExpr(2 * M, [&]() { return u(rng); });
            t.action = ua(rng);
            t.reward = u(rng) > 0 ? 1.0 : -1.0;
            batch.push_back(std::move(t));
        }
        worst = std::max(worst, worst_grad_error(net, batch));
    }

    // Toy fixed-context task: one optimal action, learned within 500 events.
    int learned = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto init_rng = make_stream(1000 + seed, Stream::Init);
        Mlp net = Mlp::init(4, 16, 4, init_rng);
        ReplayMemory mem(80);
        RmsPropState opt = RmsPropState::init(net);
        auto run_rng = make_stream(2000 + seed, Stream::Exploration);
        std::uniform_real_distribution<double> uf(-1.0, 1.0);
        const Eigen::VectorXd cs = Eigen::VectorXd::NullaryExpr(4, [&]() { return uf(run_rng); });
        for (int event = 0; event < 500; ++event) {
            ConfigIndex a;
            if (chance(epsilon_at(event), run_rng)) {
                a = std::uniform_int_distribution<ConfigIndex>(0, 3)(run_rng);
            } else {
                a = argmax_lowest(net.forward(cs));
            }
            ReplayTuple t;
            t.features = cs;
            t.action = a;
            t.reward = (a == 3) ? 1.0 : -1.0;
            mem.push(std::move(t));
            train_step(net, mem, 8, opt, lr_at(event, 0.01), run_rng);
        }
        if (argmax_lowest(net.forward(cs)) == 3) ++learned;
    }

    const bool pass = worst < 1e-4 && learned >= 9;
    std::ostringstream os;
    os << "max relative gradient error = " << worst << " (tol 1e-4) over 10 nets; toy task "
       << "learned in " << learned << "/10 seeds (need >= 9)";
    report(3, pass, os.str());
    CHECK(worst < 1e-4);
    CHECK(learned >= 9);
}

TEST_CASE("criterion 4: learning efficacy at desk scale", "[acceptance]") {
    Timer timer;
    SweepSpec spec;
    spec.base.K = 10;
    spec.base.M = 3;
    spec.base.p_act = 0.4;
    spec.base.D = 20;
    spec.base.horizon = 200000;
    spec.base.seed = 99;
    spec.key = "p_act";
    spec.values = {0.4};
    spec.replications = 10;

    const fs::path dir = fs::temp_directory_path() / "csra_acceptance_c4";
    fs::remove_all(dir);
    const auto rows = run_sweep(spec, workers(), dir.string());

    double dnn = 0.0, mab = 0.0, rch = 0.0;
    for (const auto& row : rows) {
        if (row.policy == PolicyKind::Dnn) dnn += row.metrics.p_timely;
        if (row.policy == PolicyKind::Mab) mab += row.metrics.p_timely;
        if (row.policy == PolicyKind::Rch) rch += row.metrics.p_timely;
    }
    dnn /= spec.replications;
    mab /= spec.replications;
    rch /= spec.replications;

    const double elapsed = timer.seconds();
    const bool vs_rch = dnn >= rch + 0.05;
    const bool vs_mab = dnn >= mab - 0.01;
    const bool in_time = elapsed < 900.0;
    std::ostringstream os;
    os << "mean P_timely over 10 reps: dnn = " << dnn << ", mab = " << mab << ", rch = " << rch
       << "; dnn >= rch + 0.05: " << (vs_rch ? "yes" : "NO") << "; dnn >= mab - 0.01: "
       << (vs_mab ? "yes" : "NO") << "; " << elapsed << " s (budget 900 s)";
    report(4, vs_rch && vs_mab && in_time, os.str());
    CHECK(vs_mab);
    CHECK(in_time);
    // Known-red assertion, kept as stated: with one cached CS per event,
    // per-attempt re-selection and a +/-1 delivery reward, self-interested
    // learners drift into the congestion regime, and the oracle-tuned
    // ceiling of policies expressible under these dynamics sits below
    // rch + 0.05 at this operating point (see the printed means).
    CHECK(vs_rch);
}

namespace {

bool trend_holds(const std::vector<AggregatePoint>& agg, PolicyKind policy, bool increasing) {
    std::vector<const AggregatePoint*> pts;
    for (const auto& a : agg)
        if (a.policy == policy) pts.push_back(&a);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double slack = pts[i]->p_timely_ci95 + pts[i + 1]->p_timely_ci95;
        const double delta = pts[i + 1]->p_timely_mean - pts[i]->p_timely_mean;
        if (increasing ? (delta < -slack) : (delta > slack)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("criterion 5: trend reproduction", "[acceptance]") {
    Timer timer;
    const fs::path dir = fs::temp_directory_path() / "csra_acceptance_c5";
    fs::remove_all(dir);

    SweepSpec base;
    base.base.K = 10;
    base.base.M = 3;
    base.base.p_act = 0.4;
    base.base.D = 20;
    base.base.horizon = 40000;
    base.base.seed = 7;
    base.replications = 10;

    struct SweepCase {
        std::string key;
        std::vector<double> values;
        bool increasing;  // expected direction of P_timely in the swept value
    };
    const std::vector<SweepCase> cases = {
        {"K", {10, 20, 30}, false},
        {"M", {2, 3, 4}, true},
        {"p_act", {0.2, 0.4, 0.6}, false},
    };

    bool all_pass = true;
    std::ostringstream os;
    for (const auto& sweep_case : cases) {
        SweepSpec spec = base;
        spec.key = sweep_case.key;
        spec.values = sweep_case.values;
        const auto rows = run_sweep(spec, workers(), (dir / sweep_case.key).string());
        const auto agg = aggregate_sweep(spec, rows);
        for (PolicyKind policy : {PolicyKind::Dnn, PolicyKind::Mab, PolicyKind::Rch}) {
            const bool ok = trend_holds(agg, policy, sweep_case.increasing);
            all_pass = all_pass && ok;
            os << sweep_case.key << "/" << to_string(policy) << (ok ? " ok" : " VIOLATED")
               << "; ";
        }
    }
    os << timer.seconds() << " s";
    report(5, all_pass, os.str());
    CHECK(all_pass);
}

TEST_CASE("criterion 6: brute-force optimizer oracle", "[acceptance]") {
    const auto two = brute_force_optimal_psi(2, 2, 1.0);
    std::vector<ConfigIndex> assign;
    for (int n = 0; n < 2; ++n)
        for (ConfigIndex c = 0; c < 4; ++c)
            if (two.psi.at(n, c) == 1.0) assign.push_back(c);
    const bool orthogonal = assign.size() == 2 && config_popcount(assign[0]) == 1 &&
                            config_popcount(assign[1]) == 1 && (assign[0] & assign[1]) == 0;
    const bool two_ok = std::abs(two.lambda_star - 1.0) < 1e-12 && orthogonal;

    const auto three = brute_force_optimal_psi(3, 2, 1.0);
    const double mc = mc_success_prob_seeded(three.psi, 1.0, 1000000, 4242);
    const double delta = std::abs(three.lambda_star - mc);
    const bool three_ok = delta <= 0.01;

    std::ostringstream os;
    os << "K=2,M=2: lambda* = " << two.lambda_star << (orthogonal ? " with orthogonal assignment"
                                                                  : " WITHOUT orthogonal assignment")
       << "; K=3,M=2: |lambda* - mc| = " << delta << " (tol 0.01)";
    report(6, two_ok && three_ok, os.str());
    CHECK(two_ok);
    CHECK(three_ok);
}

TEST_CASE("criterion 7: run determinism through the CLI", "[acceptance]") {
    const fs::path dir = fs::temp_directory_path() / "csra_acceptance_c7";
    fs::remove_all(dir);
    fs::create_directories(dir / "a");
    fs::create_directories(dir / "b");
    {
        std::ofstream cfg(dir / "run.cfg");
        cfg << "K = 6\nM = 2\np_act = 0.4\npolicy = dnn\nq = 8\nbatch = 16\nS = 64\n"
            << "seed = 31\nhorizon = 5000\n";
    }
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    auto invoke = [&](const std::string& out_dir) {
        const std::string cmd = std::string(CSRA_CLI_PATH) + " run " + (dir / "run.cfg").string() +
                                " --event-log --out-dir " + out_dir + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    const bool ran = invoke((dir / "a").string()) == 0 && invoke((dir / "b").string()) == 0;
    const std::string metrics_a = slurp(dir / "a" / "metrics.csv");
    const bool metrics_same = ran && metrics_a == slurp(dir / "b" / "metrics.csv");
    const bool events_same = ran && slurp(dir / "a" / "events.csv") == slurp(dir / "b" / "events.csv");
    const bool nonempty = !metrics_a.empty();

    std::ostringstream os;
    os << "two identical `run` invocations: metrics byte-identical: "
       << (metrics_same ? "yes" : "NO") << ", event logs byte-identical: "
       << (events_same ? "yes" : "NO");
    report(7, metrics_same && events_same && nonempty, os.str());
    CHECK(metrics_same);
    CHECK(events_same);
    CHECK(nonempty);
}
