#include "ifs/io.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <clocale>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace ifs::io;

namespace {

std::filesystem::path tmp(const std::string& name) {
  return std::filesystem::path(IFS_TEST_TMPDIR) / ("io_" + name);
}

template <class F>
ParseError parse_error(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("expected a parse error");
  return ParseError("", 0, "", "");
}

Dataset main_from(const std::string& text) {
  std::istringstream in(text);
  return parse_main_csv(in, "t.csv");
}

}  // namespace

TEST_CASE("number formatting and parsing") {
  CHECK(format_double(0.15) == "0.14999999999999999");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(-1e-300) == "-1e-300");
  CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");
  CHECK(parse_double("1.5") == 1.5);
  CHECK(parse_double("+2") == 2.0);
  CHECK(parse_double("-3e-2") == -0.03);
  CHECK_THROWS_AS(parse_double(""), ifs::InputError);
  CHECK_THROWS_AS(parse_double("1,5"), ifs::InputError);
  CHECK_THROWS_AS(parse_double("1.5x"), ifs::InputError);
  CHECK_THROWS_AS(parse_double("inf"), ifs::InputError);
  CHECK_THROWS_AS(parse_double("nan"), ifs::InputError);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(parse_double(format_double(std::numeric_limits<double>::denorm_min())) ==
        std::numeric_limits<double>::denorm_min());
}

TEST_CASE("parsing ignores the C locale's decimal separator") {
  const char* old = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = old ? old : "C";
  if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8") || std::setlocale(LC_NUMERIC, "fr_FR.UTF-8")) {
    CHECK(parse_double("2.5") == 2.5);
    CHECK(format_double(2.5) == "2.5");
  }
  std::setlocale(LC_NUMERIC, saved.c_str());
}

TEST_CASE("split csv line") {
  CHECK(split_csv_line("a,b,c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_csv_line(" a , b ,") == std::vector<std::string>{"a", "b", ""});
  CHECK(split_csv_line("\"x,y\",\"he said \"\"hi\"\"\",3") ==
        std::vector<std::string>{"x,y", "he said \"hi\"", "3"});
}

TEST_CASE("main csv: minimal file") {
  const auto d = main_from("time,status,g1,g2\n1.5,1,0.1,0.2\n2.5,0,-0.3,4\n");
  CHECK(d.size() == 2);
  CHECK(d.time == std::vector<double>{1.5, 2.5});
  CHECK(d.status == std::vector<int>{1, 0});
  CHECK(d.names == std::vector<std::string>{"g1", "g2"});
  CHECK(d.covariates(1, 0) == -0.3);
  CHECK(d.covariates(1, 1) == 4.0);
  CHECK(d.subject_ids.empty());
}

TEST_CASE("main csv: id column, CRLF, BOM and blank lines") {
  const auto d = main_from("\xEF\xBB\xBFid,time,status,a\r\np1,1,1,0.5\r\n\r\np2,2,0,0.25\r\n");
  CHECK(d.size() == 2);
  CHECK(d.subject_ids == std::vector<std::string>{"p1", "p2"});
  CHECK(d.names == std::vector<std::string>{"a"});
}

TEST_CASE("main csv: errors carry row and column") {
  const std::string head = "time,status,x\n";
  std::string body;
  for (int i = 0; i < 5; ++i) body += "1,1,0\n";
  const auto bad_status = parse_error([&] { main_from(head + body + "1,2,0\n"); });
  CHECK(bad_status.row() == 7);
  CHECK(bad_status.column() == "status");
  CHECK(std::string(bad_status.what()).find("row 7") != std::string::npos);

  const auto neg = parse_error([&] { main_from(head + "1,1,0\n-1,1,0\n"); });
  CHECK(neg.row() == 3);
  CHECK(neg.column() == "time");

  const auto zero = parse_error([&] { main_from(head + "1,1,0\n0,1,0\n"); });
  CHECK(zero.column() == "time");

  for (const char* missing : {"NA", "", "NaN", ".", "null"}) {
    const auto e = parse_error([&] { main_from(head + "1,1,0\n2,1," + std::string(missing) + "\n"); });
    CHECK(e.row() == 3);
    CHECK(e.column() == "x");
  }

  const auto width = parse_error([&] { main_from(head + "1,1,0\n2,1\n"); });
  CHECK(width.row() == 3);
  CHECK(width.column().empty());

  const auto text = parse_error([&] { main_from(head + "1,1,abc\n2,1,0\n"); });
  CHECK(text.row() == 2);
  CHECK(text.column() == "x");

  CHECK_THROWS_AS(main_from("t,s,x\n1,1,0\n2,1,0\n"), ParseError);
  CHECK_THROWS_AS(main_from("time,status,x\n1,1,0\n"), ParseError);
  CHECK_THROWS_AS(main_from(""), ParseError);
  CHECK_THROWS_AS(main_from("time,status,x\n1,0.5,0\n2,1,0\n"), ParseError);
}

TEST_CASE("main csv: write then load is bitwise") {
  std::mt19937_64 rng(5);
  Dataset d;
  d.covariates = oracle::random_matrix(12, 4, rng) * 1e3;
  d.names = {"a", "b", "c", "d"};
  std::exponential_distribution<double> e(0.3);
  for (int i = 0; i < 12; ++i) {
    d.time.push_back(e(rng) + 1e-9);
    d.status.push_back(i % 3 == 0 ? 0 : 1);
  }
  write_main_csv(tmp("round.csv"), d);
  const auto back = load_main_csv(tmp("round.csv"));
  CHECK(back.time == d.time);
  CHECK(back.status == d.status);
  CHECK(back.names == d.names);
  CHECK(back.covariates == d.covariates);

  d.subject_ids.clear();
  for (int i = 0; i < 12; ++i) d.subject_ids.push_back("s" + std::to_string(i));
  write_main_csv(tmp("round_ids.csv"), d);
  CHECK(load_main_csv(tmp("round_ids.csv")).subject_ids == d.subject_ids);

  CHECK_THROWS_AS(load_main_csv(tmp("does_not_exist.csv")), ifs::InputError);
}

TEST_CASE("repeats csv") {
  std::istringstream in(
      "subject,replicate,x1,x2\n"
      "a,1,1,2\n"
      "b,1,0,0\n"
      "a,2,3,2\n"
      "c,1,5,5\n"
      "b,2,0,1\n"
      "d,1,1,1\n"
      "c,2,5,5\n");
  const auto r = parse_repeats_csv(in, "r.csv");
  REQUIRE(r.subjects.size() == 4);
  CHECK(r.subjects[0].id == "a");
  CHECK(r.subjects[1].id == "b");
  CHECK(r.subjects[0].replicates.rows() == 2);
  CHECK(r.subjects[0].replicates(1, 0) == 3.0);
  CHECK(r.subjects[3].replicates.rows() == 1);
  CHECK(r.single_replicate_subjects == 1);
  CHECK(r.contrasts() == 3);
  CHECK(r.dimension() == 2);

  std::istringstream dup("subject,replicate,x\na,1,1\na,1,2\n");
  const auto e = parse_error([&] { parse_repeats_csv(dup, "r.csv"); });
  CHECK(e.row() == 3);
  CHECK(e.column() == "replicate");

  std::istringstream head("subj,rep,x\na,1,1\n");
  CHECK_THROWS_AS(parse_repeats_csv(head, "r.csv"), ParseError);
}

TEST_CASE("repeats csv: identical replicates estimate a zero covariance") {
  std::istringstream in("subject,replicate,x1,x2\n"
                        "1,1,0.5,2\n1,2,0.5,2\n"
                        "2,1,-1,3\n2,2,-1,3\n"
                        "3,1,4,4\n3,2,4,4\n");
  const auto r = parse_repeats_csv(in, "r.csv");
  CHECK(r.subjects.size() == 3);
  for (const auto& s : r.subjects) CHECK(s.replicates.rows() == 2);
  CHECK(ifs::error_model::sigma_from_repeats(r).matrix().isZero(0.0));
}

TEST_CASE("validation csv") {
  std::istringstream in("xs1,xs2,x1,x2\n1,2,0.5,1.5\n3,4,3,3\n");
  const auto v = parse_validation_csv(in, "v.csv");
  CHECK(v.surrogate.rows() == 2);
  CHECK(v.surrogate(1, 1) == 4.0);
  CHECK(v.truth(0, 1) == 1.5);

  std::istringstream odd("a,b,c\n1,2,3\n4,5,6\n");
  const auto e = parse_error([&] { parse_validation_csv(odd, "v.csv"); });
  CHECK(e.row() == 1);

  std::istringstream one("a,b\n1,2\n");
  CHECK_THROWS_AS(parse_validation_csv(one, "v.csv"), ParseError);
}

TEST_CASE("matrix csv round trip") {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd m = oracle::random_matrix(4, 4, rng);
  std::ostringstream out;
  out << "# comment line\n";
  write_matrix_csv(out, m);
  std::istringstream in(out.str());
  CHECK(parse_matrix_csv(in, "m.csv") == m);

  std::istringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(parse_matrix_csv(ragged, "m.csv"), ParseError);
}
