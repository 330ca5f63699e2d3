#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "oqe/serialization.hpp"
#include "oqe/tomography.hpp"

using namespace oqe;

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
    const std::string cmd = std::string(OQE_CLI_PATH) + " " + args +
                            " >/dev/null 2>/dev/null";
    const int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WEXITSTATUS(rc);
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("oqe_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("simulate writes parseable files and reruns bitwise identically") {
    TempDir dir;
    const std::string base = "simulate --d 2 --D 3 --k 4 --eta 0.2 --seed 11 --output ";
    CHECK(run(base + dir.file("a")) == 0);
    CHECK(run(base + dir.file("b")) == 0);
    CHECK(read_text_file(dir.file("a_model.json")) ==
          read_text_file(dir.file("b_model.json")));
    CHECK(read_text_file(dir.file("a_ppt.json")) ==
          read_text_file(dir.file("b_ppt.json")));

    const OqeModel m = model_from_json(load_json(dir.file("a_model.json")));
    CHECK(m.d == 2);
    CHECK(m.D == 3);
    CHECK(m.seed == 11);
    const Ppt ppt = ppt_from_json(load_json(dir.file("a_ppt.json")));
    CHECK(ppt.k == 4);
    for (int j = 0; j <= 4; ++j) CHECK(ppt.bond_dim(j) <= 3);
}

TEST_CASE("tomography reports the window size and a clean round trip") {
    TempDir dir;
    REQUIRE(run("simulate --d 2 --D 3 --k 4 --eta 0.5 --seed 13 --output " +
                dir.file("m")) == 0);
    CHECK(run("tomography --model " + dir.file("m_model.json") +
              " --d 2 --D 3 --k 4 --epsilon 0 --seed 13 --output " + dir.file("t")) == 0);

    const Json t = load_json(dir.file("t_transcript.json"));
    CHECK(t.at("kappa").get<int>() == plan(2, 4, 3).kappa);
    CHECK(t.at("process_fidelity").get<double>() >= 1.0 - 1e-8);
    CHECK(t.at("final_leakage").get<double>() <= 1e-8);
    const Ppt recon = ppt_from_json(load_json(dir.file("t_recon_ppt.json")));
    CHECK(recon.k == 4);

    // Reruns are bitwise identical.
    REQUIRE(run("tomography --model " + dir.file("m_model.json") +
                " --d 2 --D 3 --k 4 --epsilon 0 --seed 13 --output " +
                dir.file("t2")) == 0);
    CHECK(read_text_file(dir.file("t_recon_ppt.json")) ==
          read_text_file(dir.file("t2_recon_ppt.json")));
}

TEST_CASE("exit codes distinguish the failure modes") {
    TempDir dir;
    REQUIRE(run("simulate --d 2 --D 5 --k 4 --eta 0.5 --seed 17 --output " +
                dir.file("m")) == 0);
    // Environment bound below the truth: leakage error, exit 3.
    CHECK(run("tomography --model " + dir.file("m_model.json") +
              " --d 2 --D 2 --k 4 --output " + dir.file("x")) == 3);
    // Unknown flag: validation error, exit 2.
    CHECK(run("simulate --nonsense 1 --output " + dir.file("y")) == 2);
    // Missing model file: I/O error, exit 5.
    CHECK(run("tomography --model " + dir.file("missing.json") + " --d 2 --D 2 --k 4 "
              "--output " + dir.file("z")) == 5);
    // Invalid mode for extrapolate: exit 2.
    CHECK(run("extrapolate --mode time-dependent --output " + dir.file("w")) == 2);
}

TEST_CASE("memory-sweep emits the documented columns deterministically") {
    TempDir dir;
    const std::string base = "memory-sweep --d 2 --D 3 --eta 0.5 --seed 19 --gamma 1 "
                             "--init both --horizon 12 --output ";
    CHECK(run(base + dir.file("s.csv")) == 0);
    CHECK(run(base + dir.file("s2.csv")) == 0);
    CHECK(read_text_file(dir.file("s.csv")) == read_text_file(dir.file("s2.csv")));

    const std::string text = read_text_file(dir.file("s.csv"));
    CHECK(text.find("j,memory_size,complexity,init,predicted_limit") !=
          std::string::npos);
    CHECK(text.find(",pure,") != std::string::npos);
    CHECK(text.find(",mixed,") != std::string::npos);
    // 2 * 13 data rows plus the header lines.
    int lines = 0;
    for (const char ch : text)
        if (ch == '\n') ++lines;
    CHECK(lines == 2 + 26);
}

TEST_CASE("extrapolate produces a per-step infidelity table") {
    TempDir dir;
    const std::string base =
        "extrapolate --d 2 --D 2 --eta 0.3 --seed 23 --mode time-independent "
        "--fit-k 3 --horizon 4 --output ";
    CHECK(run(base + dir.file("e.csv")) == 0);
    const std::string text = read_text_file(dir.file("e.csv"));
    CHECK(text.find("j,infidelity,fit_k") != std::string::npos);
    int data_rows = 0;
    std::size_t pos = 0;
    while ((pos = text.find("\n", pos + 1)) != std::string::npos) ++data_rows;
    CHECK(data_rows == 2 + 5); // header comment + column row + j = 0..4

    // The k = 3 fit on a D = 2 environment is identifiable; predictions hold.
    std::istringstream ss(text);
    std::string line;
    std::getline(ss, line); // comment
    std::getline(ss, line); // header
    while (std::getline(ss, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const double infid = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        CHECK(infid <= 1e-4);
    }
    const Json report = load_json(dir.file("e.csv_fit_k3.json"));
    CHECK(report.at("final_loss").get<double>() <= 1e-8);
}
