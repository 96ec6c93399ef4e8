#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <json.hpp>
#include <sstream>

#include "attrsparse/io.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using attrsparse::read_text_file;

namespace {

const fs::path kData = ATTRSPARSE_DATA_DIR;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run cli(const std::string& args) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() / "attrsparse_test_cli_io";
  fs::create_directories(dir);
  const fs::path out = dir / ("out" + std::to_string(counter) + ".txt");
  const fs::path err = dir / ("err" + std::to_string(counter++) + ".txt");
  const std::string cmd = std::string("\"") + ATTRSPARSE_CLI + "\" " + args + " >\"" +
                          out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text_file(out);
  r.err = read_text_file(err);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("help and parse errors") {
  CHECK(cli("--help").code == 0);
  CHECK(cli("train --help").out.find("--regime") != std::string::npos);
  CHECK(cli("train").code == 1);  // --data is required
  CHECK(cli("no-such-command").code == 1);
}

TEST_CASE("train: outputs, regime validation, eps = 0 equivalence") {
  const auto dir = testutil::scratch("cli_train");
  const std::string data = "--data " + q(kData / "spambase.csv") + " --epochs 2 --seed 4";
  const Run nat = cli("train " + data + " --regime natural --model-out " + q(dir / "n.json") +
                      " --trace-out " + q(dir / "n.csv"));
  REQUIRE(nat.code == 0);
  CHECK(fs::exists(dir / "n.json"));
  CHECK(read_text_file(dir / "n.csv").rfind("epoch,loss,acc,l1_norm,weight_gini\n", 0) == 0);

  const Run adv0 = cli("train " + data + " --regime adversarial --eps 0 --model-out " +
                       q(dir / "a0.json") + " --trace-out " + q(dir / "a0.csv"));
  REQUIRE(adv0.code == 0);
  CHECK(read_text_file(dir / "a0.json") == read_text_file(dir / "n.json"));

  const Run bad = cli("train " + data + " --regime robust");
  CHECK(bad.code == 1);
  CHECK(bad.err.find("natural, adversarial, l1, stable-ig") != std::string::npos);

  CHECK(cli("train --data " + q(dir / "missing.csv")).code == 1);
  CHECK(cli("train " + data + " --loss square").code == 1);

  // Config file with a flag overriding it.
  testutil::write(dir / "cfg.json", R"({"regime": "l1", "lambda": 0.5, "epochs": 1})");
  const Run cfg = cli("train --data " + q(kData / "spambase.csv") + " --config " + q(dir / "cfg.json") +
                      " --lambda 100 --model-out " + q(dir / "l.json") + " --trace-out " +
                      q(dir / "l.csv"));
  REQUIRE(cfg.code == 0);
  const auto model = nlohmann::json::parse(read_text_file(dir / "l.json"));
  CHECK(model.dump().find("\"kind\":\"linear\"") != std::string::npos);
  // lambda 100 zeroes everything.
  for (const auto& w : model["w"]) CHECK(std::stod(w.get<std::string>()) == 0.0);
  testutil::write(dir / "bad.json", R"({"regime": "l1", "lamda": 0.5})");
  CHECK(cli("train --data " + q(kData / "spambase.csv") + " --config " + q(dir / "bad.json")).code == 1);
}

TEST_CASE("train: divergence exits with 2") {
  const auto dir = testutil::scratch("cli_div");
  std::string text = "a,label\n";
  // Not separable, so some examples keep a huge loss as w grows.
  for (int i = 0; i < 40; ++i) text += (i % 2 ? "1e150," : "-1e150,") + std::string(i / 2 % 2 ? "1\n" : "0\n");
  testutil::write(dir / "huge.csv", text);
  const Run r = cli("train --data " + q(dir / "huge.csv") + " --optimizer sgd --lr 1000 --epochs 2" +
                    " --model-out " + q(dir / "m.json") + " --trace-out " + q(dir / "t.csv"));
  CHECK(r.code == 2);
  CHECK(r.err.find("step") != std::string::npos);
}

TEST_CASE("compare: outputs and byte-identical reruns") {
  const auto d1 = testutil::scratch("cli_cmp1");
  const auto d2 = testutil::scratch("cli_cmp2");
  const std::string args = "compare --data " + q(kData / "spambase.csv") + " --epochs 3 --eps-list 0.1" +
                           " --lambda-list 0.02 --out-dir ";
  REQUIRE(cli(args + q(d1)).code == 0);
  REQUIRE(cli(args + q(d2)).code == 0);
  for (const char* f : {"report.json", "table1.csv", "per_example_dG.csv", "sweep.csv"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(d1 / f));
    CHECK(read_text_file(d1 / f) == read_text_file(d2 / f));
  }
  CHECK(fs::exists(d1 / "run_info.json"));
  const std::string table = read_text_file(d1 / "table1.csv");
  CHECK(table.find("spambase,IG,\"n\",0,0\n") != std::string::npos);

  const auto d3 = testutil::scratch("cli_cmp3");
  REQUIRE(cli("compare --data " + q(kData / "spambase.csv") + " --epochs 2 --eps-list \"\" --out-dir " +
              q(d3)).code == 0);
  const auto j = nlohmann::json::parse(read_text_file(d3 / "report.json"));
  REQUIRE(j["regimes"].size() == 2);
  CHECK(j["regimes"][0]["model"] == "n");
  CHECK(j["regimes"][1]["model"] == "l(lambda=0.02)");
}

TEST_CASE("attribute: closed vs numeric, FI width, baseline mismatch") {
  const auto dir = testutil::scratch("cli_attr");
  const std::string data = "--data " + q(kData / "spambase.csv");
  REQUIRE(cli("train " + data + " --epochs 2 --model-out " + q(dir / "m.json") + " --trace-out " +
              q(dir / "t.csv")).code == 0);
  REQUIRE(cli("attribute " + data + " --model " + q(dir / "m.json") + " --method closed --out-dir " +
              q(dir / "closed")).code == 0);
  REQUIRE(cli("attribute " + data + " --model " + q(dir / "m.json") +
              " --method numeric --steps 4096 --out-dir " + q(dir / "numeric")).code == 0);

  std::istringstream fi(read_text_file(dir / "closed" / "fi.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(fi, line)) ++rows;
  CHECK(rows == 57);

  std::istringstream a(read_text_file(dir / "closed" / "attributions.csv"));
  std::istringstream b(read_text_file(dir / "numeric" / "attributions.csv"));
  std::string la, lb;
  std::getline(a, la);
  std::getline(b, lb);
  double worst = 0.0;
  std::size_t n = 0;
  while (std::getline(a, la) && std::getline(b, lb)) {
    const double va = std::stod(la.substr(la.rfind(',') + 1));
    const double vb = std::stod(lb.substr(lb.rfind(',') + 1));
    worst = std::max(worst, std::abs(va - vb));
    ++n;
  }
  CHECK(n > 1000);
  CHECK(worst <= 1e-6);

  const Run bad = cli("attribute " + data + " --model " + q(dir / "m.json") + " --baseline 0,0 --out-dir " +
                      q(dir / "bad"));
  CHECK(bad.code == 1);
  CHECK(bad.err.find("baseline") != std::string::npos);
}

TEST_CASE("attribute on image data writes one PGM per example") {
  const auto dir = testutil::scratch("cli_img");
  REQUIRE(cli("synth --blobs --n 30 --seed 2 --out " + q(dir / "blobs.csv")).code == 0);
  REQUIRE(fs::exists(dir / "blobs.schema.json"));
  REQUIRE(cli("train --data " + q(dir / "blobs.csv") + " --epochs 1 --hidden 4 --model-out " +
              q(dir / "m.json") + " --trace-out " + q(dir / "t.csv")).code == 0);
  REQUIRE(cli("attribute --data " + q(dir / "blobs.csv") + " --model " + q(dir / "m.json") +
              " --steps 16 --out-dir " + q(dir / "out")).code == 0);
  std::size_t pgms = 0;
  for (const auto& e : fs::directory_iterator(dir / "out" / "pgm")) pgms += e.path().extension() == ".pgm";
  CHECK(pgms == 9);  // 30 - floor(0.7 * 30) test examples
}

TEST_CASE("gini subcommand") {
  const Run r = cli("gini --values 0,0,0,1");
  CHECK(r.code == 0);
  CHECK(r.out == "0.75\n");
  CHECK(cli("gini --values 0,0").out.find("degenerate") != std::string::npos);
  CHECK(cli("gini --values 1,abc").code == 1);
  const auto dir = testutil::scratch("cli_gini");
  testutil::write(dir / "v.txt", "0\n0\n-3\n0\n");
  CHECK(cli("gini --file " + q(dir / "v.txt")).out == "0.75\n");
}

TEST_CASE("verify subcommand") {
  const auto dir = testutil::scratch("cli_verify");
  const Run r = cli("verify thm3 --trials 100 --out " + q(dir / "t3.json"));
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(read_text_file(dir / "t3.json"));
  CHECK(j["all_pass"] == true);
  CHECK(cli("verify thm1-zero --n 20000").code == 0);
  CHECK(cli("verify lemmaD1 --n 10000 --constructions 5").code == 0);
  const Run bad = cli("verify thm9");
  CHECK(bad.code == 1);
  CHECK(bad.err.find("thm1-zero") != std::string::npos);
}

TEST_CASE("synth writes a loadable dataset with the requested strengths") {
  const auto dir = testutil::scratch("cli_synth");
  REQUIRE(cli("synth --a 1,0 --noise 0.1,0.1 --n 500 --seed 3 --out " + q(dir / "s.csv")).code == 0);
  const std::string first = read_text_file(dir / "s.csv");
  REQUIRE(cli("synth --a 1,0 --noise 0.1,0.1 --n 500 --seed 3 --out " + q(dir / "s.csv")).code == 0);
  CHECK(read_text_file(dir / "s.csv") == first);
  // y x_0 is about 1 on every row.
  std::istringstream in(first);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const double x0 = std::stod(line.substr(0, line.find(',')));
    const bool pos = line.substr(line.rfind(',') + 1) == "+1";
    CHECK((pos ? x0 : -x0) > 0.5);
  }
  CHECK(cli("synth --a 1 --noise 0 --n 10 --out " + q(dir / "z.csv")).code == 1);
}
