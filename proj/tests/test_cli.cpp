#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "osmee/csv.hpp"
#include "osmee/osmee.hpp"
#include "osmee/rng.hpp"
#include "osmee/simlab.hpp"

using namespace osmee;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output; // stdout and stderr interleaved
};

CmdResult run_cmd(const std::string& cmd) {
    CmdResult r;
    std::string full = cmd + " 2>&1";
    FILE* pipe = popen(full.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t got = 0;
    while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, got);
    int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string cli() { return std::string(OSMEE_CLI_PATH); }

fs::path work_dir() {
    fs::path p = fs::temp_directory_path() / "osmee_cli_tests";
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// poisson responses over a smooth curve; returns the file path and keeps the
// exact doubles for in-process comparisons
struct WrittenData {
    fs::path path;
    Eigen::VectorXd y, w;
};

WrittenData write_poisson_csv(const fs::path& file, long n, double sigma_w, std::uint64_t seed) {
    WrittenData d;
    d.path = file;
    d.y.resize(n);
    d.w.resize(n);
    auto eng = engine(seed);
    std::normal_distribution<double> x_dist(0.5, 0.25), noise(0.0, 1.0);
    for (long i = 0; i < n; ++i) {
        double x = x_dist(eng);
        d.w[i] = x + sigma_w * noise(eng);
        std::poisson_distribution<long> pois(std::exp(0.4 + std::sin(2.0 * M_PI * x)));
        d.y[i] = static_cast<double>(pois(eng));
    }
    std::ofstream out(file, std::ios::binary);
    REQUIRE(out.good());
    out << "y,w\n";
    for (long i = 0; i < n; ++i)
        out << format_double(d.y[i]) << ',' << format_double(d.w[i]) << "\n";
    return d;
}

} // namespace

TEST_CASE("missing required column exits with code 2") {
    fs::path dir = work_dir();
    fs::path bad = dir / "only_y.csv";
    {
        std::ofstream out(bad, std::ios::binary);
        out << "y\n1\n2\n3\n";
    }
    CmdResult r = run_cmd(cli() + " fit --input " + bad.string() + " --output " +
                          (dir / "unused.csv").string() + " --sigma-w2 0.01");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("'w'") != std::string::npos);
}

TEST_CASE("unknown scenario id exits with code 2") {
    fs::path dir = work_dir();
    CmdResult r = run_cmd(cli() + " simulate --case 5 --n-list 64 --reps 2 --output " +
                          (dir / "unused_study.csv").string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("1..4") != std::string::npos);
}

TEST_CASE("malformed flag values exit with code 2") {
    fs::path dir = work_dir();
    WrittenData data = write_poisson_csv(dir / "flags.csv", 60, 0.1, 21);
    const std::string base = cli() + " fit --input " + data.path.string() + " --output " +
                             (dir / "flags_out.csv").string();
    CHECK(run_cmd(base + " --sigma-w -0.5").exit_code == 2);
    CHECK(run_cmd(base).exit_code == 2); // no error scale given
    CHECK(run_cmd(base + " --sigma-w 0.1 --family weibull").exit_code == 2);
    CHECK(run_cmd(base + " --sigma-w 0.1 --basis quintic").exit_code == 2);
    CHECK(run_cmd(base + " --sigma-w 0.1 --method aic").exit_code == 2);
    CHECK(run_cmd(base + " --sigma-w 0.1 --grid 1:0:50").exit_code == 2);
    CHECK(run_cmd(base + " --sigma-w 0.1 --basis-dim 3").exit_code == 2);
    CHECK(run_cmd(base + " --sigma-w 0.1 --mc-samples 1").exit_code == 2);
    // flag parsing failures from the option library are nonzero too
    CHECK(run_cmd(cli() + " fit --output x.csv --sigma-w 0.1").exit_code != 0);
}

TEST_CASE("fit output is byte-identical across runs and thread counts") {
    fs::path dir = work_dir();
    WrittenData data = write_poisson_csv(dir / "fit_in.csv", 120, 0.1, 33);
    auto cmd = [&](const std::string& threads, const std::string& out) {
        return "OSMEE_THREADS=" + threads + " " + cli() + " fit --input " + data.path.string() +
               " --output " + (dir / out).string() +
               " --family poisson --basis tp --basis-dim 8 --mc-samples 200 --sigma-w 0.1" +
               " --seed 7 --grid 0:1:51";
    };
    CmdResult r1 = run_cmd(cmd("1", "fit_a.csv"));
    REQUIRE(r1.exit_code == 0);
    CHECK(r1.output.find("wrote") != std::string::npos);
    CmdResult r2 = run_cmd(cmd("4", "fit_b.csv"));
    REQUIRE(r2.exit_code == 0);
    CmdResult r3 = run_cmd(cmd("4", "fit_c.csv"));
    REQUIRE(r3.exit_code == 0);

    const std::string a = slurp(dir / "fit_a.csv");
    CHECK(a == slurp(dir / "fit_b.csv"));
    CHECK(a == slurp(dir / "fit_c.csv"));
    const std::string ra = slurp(dir / "fit_a.report.txt");
    CHECK(ra == slurp(dir / "fit_b.report.txt"));
    CHECK(ra == slurp(dir / "fit_c.report.txt"));
    CHECK(ra.find("qgcv path:") != std::string::npos);
    CHECK(ra.find("<- selected") != std::string::npos);
    CHECK(ra.find("seed: 7") != std::string::npos);

    // the curve file parses back and covers the requested grid
    CsvTable tab = read_csv((dir / "fit_a.csv").string());
    std::vector<double> d = tab.column("d");
    std::vector<double> mu = tab.column("fitted_mean");
    REQUIRE(d.size() == 51);
    CHECK(d.front() == 0.0);
    CHECK(d.back() == 1.0);
    for (double m : mu) CHECK(m > 0.0);
}

TEST_CASE("zero error variance reproduces the naive fit through the CLI") {
    fs::path dir = work_dir();
    WrittenData data = write_poisson_csv(dir / "naive_in.csv", 150, 0.0, 41);
    CmdResult r = run_cmd(cli() + " fit --input " + data.path.string() + " --output " +
                          (dir / "naive_out.csv").string() +
                          " --family poisson --basis tp --basis-dim 8 --sigma-w 0 " +
                          "--grid 0:1:51");
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(dir / "naive_out.report.txt").find("sampler: none") != std::string::npos);

    // the same grid construction as the CLI: endpoint-exact linear blend
    Eigen::VectorXd grid(51);
    for (int i = 0; i < 51; ++i) {
        const double t = static_cast<double>(i) / 50.0;
        grid[i] = 0.0 * (1.0 - t) + 1.0 * t;
    }
    NaiveFit nf = fit_naive_glm(data.y, data.w, BasisKind{BasisKindId::thin_plate, 8},
                                FamilySpec::make(Family::poisson), SmoothSelect::reml);
    Eigen::VectorXd expect = predict_naive_curve(nf, FamilySpec::make(Family::poisson), grid);

    CsvTable tab = read_csv((dir / "naive_out.csv").string());
    std::vector<double> mu = tab.column("fitted_mean");
    REQUIRE(mu.size() == 51);
    double worst = 0.0;
    for (int i = 0; i < 51; ++i) worst = std::max(worst, std::abs(mu[i] - expect[i]));
    CHECK(worst < 1e-10);
}

TEST_CASE("simulation subcommand writes the study table") {
    fs::path dir = work_dir();
    fs::path out = dir / "study.csv";
    CmdResult r = run_cmd(cli() + " simulate --case 1 --family poisson --n-list 64 --reps 2" +
                          " --basis-dim 10 --mc-samples 150 --seed 3 --output " + out.string());
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("wrote") != std::string::npos);

    // the study table mixes text and numbers, so split it by hand
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::string cur;
        for (char c : line) {
            if (c == ',') { cells.push_back(cur); cur.clear(); }
            else cur += c;
        }
        cells.push_back(cur);
        return cells;
    };
    std::istringstream table(slurp(out));
    std::string line;
    REQUIRE(std::getline(table, line));
    CHECK(line ==
          "case,family,xdist,estimator,n,reps_used,reps_failed,mse,bias2_fraction,runtime_sec");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(table, line))
        if (!line.empty()) rows.push_back(split(line));
    REQUIRE(rows.size() == 2); // naive plus the configured (gaussian) sampler
    CHECK(rows[0][3] == "naive");
    CHECK(rows[1][3] == "osmee_gaussian");
    for (const auto& cells : rows) {
        REQUIRE(cells.size() == 10);
        CHECK(cells[1] == "poisson");
        CHECK(cells[5] == "2"); // reps used
        const double mse = std::stod(cells[7]);
        CHECK(std::isfinite(mse));
        CHECK(mse > 0.0);
    }

    // estimator subsetting drops to a single row
    CmdResult rn = run_cmd(cli() + " simulate --case 1 --family poisson --n-list 64 --reps 2" +
                           " --basis-dim 10 --mc-samples 150 --estimators naive --output " +
                           out.string());
    REQUIRE(rn.exit_code == 0);
    std::istringstream naive_only(slurp(out));
    int lines = 0;
    while (std::getline(naive_only, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 2); // header plus one row

    CHECK(run_cmd(cli() + " simulate --case 1 --n-list 64 --reps 2 --estimators magic" +
                  " --output " + out.string())
              .exit_code == 2);
}

TEST_CASE("sensitivity sweep refits one dataset under several error variances") {
    fs::path dir = work_dir();
    // bernoulli outcomes over a wide predictor so the sweep has room to act
    const long n = 250;
    Eigen::VectorXd y(n), w(n);
    auto eng = engine(55);
    std::normal_distribution<double> wdist(0.0, 5.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (long i = 0; i < n; ++i) {
        w[i] = wdist(eng);
        const double p = 1.0 / (1.0 + std::exp(-(0.8 + 0.5 * w[i])));
        y[i] = unif(eng) < p ? 1.0 : 0.0;
    }
    fs::path input = dir / "sens_in.csv";
    {
        std::ofstream out(input, std::ios::binary);
        out << "y,w\n";
        for (long i = 0; i < n; ++i)
            out << format_double(y[i]) << ',' << format_double(w[i]) << "\n";
    }

    fs::path out = dir / "sens.csv";
    CmdResult r = run_cmd(cli() + " sensitivity --input " + input.string() + " --output " +
                          out.string() +
                          " --family bernoulli --basis tp --basis-dim 8 --mc-samples 150" +
                          " --seed 9 --sigma-w2-list 0,1,4,9,16 --grid -12:12:51");
    REQUIRE(r.exit_code == 0);

    // combined long table: 5 variances x 51 grid points, probabilities throughout
    CsvTable tab = read_csv(out.string());
    std::vector<double> s2 = tab.column("sigma_w2");
    std::vector<double> mu = tab.column("fitted_mean");
    REQUIRE(s2.size() == 5 * 51);
    for (double v : mu) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    // one curve file per variance
    for (const char* tag : {"0", "1", "4", "9", "16"}) {
        fs::path per = dir / ("sens_sw2_" + std::string(tag) + ".csv");
        CHECK(fs::exists(per));
        CHECK(read_csv(per.string()).column("fitted_mean").size() == 51);
    }

    // the reliability table reproduces the library arithmetic
    const double var_w = (w.array() - w.mean()).square().sum() / (n - 1.0);
    CsvTable rel = read_csv((dir / "sens_reliability.csv").string());
    std::vector<double> rs2 = rel.column("sigma_w2");
    std::vector<double> lit = rel.column("reliability");
    std::vector<double> used = rel.column("sigma_w2_used");
    REQUIRE(rs2.size() == 5);
    for (std::size_t i = 0; i < rs2.size(); ++i) {
        CHECK(lit[i] == doctest::Approx(reliability_ratio(var_w, rs2[i])).epsilon(1e-9));
        CHECK(used[i] == rs2[i]); // untransformed sweep passes variances through
    }
}
