#include <gtest/gtest.h>

#include <filesystem>

#include "test_util.hpp"

using namespace kfinder;

namespace {

std::string parse_failure(std::string_view text) {
  try {
    parse_points_text(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Points, ParseExamples) {
  auto p = parse_points_text("1,2\n3.5, -4e2\n");
  ASSERT_EQ(p.size(), 2u);
  ASSERT_EQ(p.dim(), 2u);
  EXPECT_EQ(p.matrix()(1, 1), -400.0);
  EXPECT_EQ(parse_points_text("7").size(), 1u);
  EXPECT_EQ(parse_points_text("1,2\r\n3,4\r\n").size(), 2u);
}

TEST(Points, ParseErrors) {
  EXPECT_NE(parse_failure("").find("empty file"), std::string::npos);
  EXPECT_NE(parse_failure("1,2\n\n3,4\n").find("empty row at line 2"), std::string::npos);
  EXPECT_NE(parse_failure("1,2\n3,x\n").find("non-numeric token"), std::string::npos);
  EXPECT_NE(parse_failure("1,2\n3\n").find("ragged row at line 2"), std::string::npos);
  EXPECT_NE(parse_failure("1,nan\n").find("non-numeric"), std::string::npos);
  EXPECT_NE(parse_failure("1,inf\n").find("non-numeric"), std::string::npos);
  try {
    parse_points("/nonexistent/file.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "io-error");
    EXPECT_TRUE(is_input_error(e));
  }
}

TEST(Points, RoundTripIsExact) {
  std::mt19937_64 g(113);
  auto p = testutil::to_points(oracle::random_rows(g, 30, 4, 1e3));
  auto q = parse_points_text(format_points(p));
  EXPECT_EQ(p.matrix(), q.matrix());
  EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
}

TEST(Labels, ParseAndCount) {
  EXPECT_EQ(parse_labels_text("1\n2\n2\n"), (std::vector<int>{1, 2, 2}));
  EXPECT_THROW(parse_labels_text("1\n0\n"), ParseError);
  EXPECT_THROW(parse_labels_text("1\nx\n"), ParseError);
  EXPECT_THROW(parse_labels_text("1\n2\n", Index{3}), ParseError);
  EXPECT_EQ(parse_labels_text(format_labels({3, 1, 2})), (std::vector<int>{3, 1, 2}));
}

TEST(ThreeCoverFile, RoundTrip) {
  auto inst = generate_three_cover(9, true, 1);
  auto back = parse_three_cover_text(format_three_cover(inst));
  EXPECT_EQ(back.universe, inst.universe);
  EXPECT_EQ(back.sets, inst.sets);
  EXPECT_THROW(parse_three_cover_text("3\n1 2\n"), ParseError);
  EXPECT_THROW(parse_three_cover_text("3\n0 1 2\n"), ParseError);
  EXPECT_THROW(parse_three_cover_text("3\n1 2 3 4\n"), ParseError);
  // Well-formed syntax but wrong degrees is caught by validation.
  EXPECT_THROW(parse_three_cover_text("3\n1 2 3\n").validate(), Error);
}

TEST(GeneratorSpec, MixtureFile) {
  const char* text =
      "# two components\n"
      "n = 50\n"
      "seed = 9\n"
      "[component]\n"
      "mean = 0, 0\n"
      "cov = 2\n"
      "weight = 0.25\n"
      "[component]\n"
      "mean = 5, 5\n"
      "cov = 1, 0.5; 0.5, 1\n"
      "kind = rademacher\n";
  auto cfg = parse_generator_spec_text(text);
  ASSERT_TRUE(cfg.mixture);
  EXPECT_EQ(*cfg.n, 50u);
  EXPECT_EQ(*cfg.seed, 9u);
  const auto& c = cfg.mixture->components;
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].covariance, 2.0 * Matrix::Identity(2, 2));
  EXPECT_DOUBLE_EQ(c[1].weight, 0.75);
  EXPECT_EQ(c[1].kind, ComponentKind::rademacher);
  EXPECT_EQ(c[1].covariance(0, 1), 0.5);
}

TEST(GeneratorSpec, SbmFile) {
  auto cfg = parse_generator_spec_text(
      "[sbm]\nn = 40\nweights = 0.5, 0.5\nprob_row = 0.4, 0.1\nprob_row = 0.1, 0.4\nseed = 2\n");
  ASSERT_TRUE(cfg.sbm);
  EXPECT_EQ(cfg.sbm->n, 40u);
  EXPECT_EQ(cfg.sbm->prob(1, 0), 0.1);
  EXPECT_EQ(*cfg.seed, 2u);
}

TEST(GeneratorSpec, Errors) {
  auto message = [](std::string_view text) {
    try {
      parse_generator_spec_text(text);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("[component]\nmean = 0\ncolour = red\n").find("line 3"), std::string::npos);
  EXPECT_NE(message("[mixture]\n").find("unknown section"), std::string::npos);
  EXPECT_NE(message("n = 5\n").find("no [component]"), std::string::npos);
  EXPECT_NE(message("[component]\nmean = 0\ncov = 1, 2; 3\n").find("square"), std::string::npos);
  EXPECT_NE(message("[component]\nmean = 0\nkind = cauchy\n").find("unknown kind"), std::string::npos);
  EXPECT_FALSE(message("[component]\nmean = 0, 0\ncov = 1, 2; 3, 4\n").empty());
}

TEST(Report, KeyValueLines) {
  Report r;
  r.add("command", "identify-peel");
  r.add("k_hat", Index{3});
  r.add("ok", true);
  r.add("x", 0.5);
  r.add("set", IndexSet{0, 4});
  EXPECT_EQ(r.str().substr(0, 40), std::string("command=identify-peel\nk_hat=3\nok=true\nx=").substr(0, 40));
  EXPECT_EQ(r.entries().size(), 5u);
  EXPECT_EQ(io::hex64(io::fnv1a("")), "cbf29ce484222325");
}

TEST(Files, WriteAndRead) {
  const auto path = std::filesystem::temp_directory_path() / "kfinder_io_test.txt";
  io::write_file(path.string(), "abc\n");
  EXPECT_EQ(io::read_file(path.string()), "abc\n");
  std::filesystem::remove(path);
  EXPECT_THROW(io::write_file("/nonexistent/dir/x.txt", "a"), IoError);
}
