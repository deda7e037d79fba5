#include <gtest/gtest.h>

#include <sstream>

#include "balloc/cli.hpp"
#include "balloc/config_file.hpp"
#include "balloc/error.hpp"
#include "balloc/selftest.hpp"
#include "balloc/svg.hpp"
#include "balloc/table.hpp"

using namespace balloc;

namespace {

int cli(const std::vector<std::string>& args, std::string& out, std::string& err) {
  std::ostringstream o, e;
  int rc = cli_main(args, o, e);
  out = o.str();
  err = e.str();
  return rc;
}

Table small_table() {
  Table t;
  t.columns = {"process", "n", "gap"};
  t.add_row({std::string("a"), std::int64_t{8}, 1.5});
  t.add_row({std::string("a"), std::int64_t{16}, 2.0});
  t.add_row({std::string("b,c"), std::int64_t{8}, 3.25});
  return t;
}

}  // namespace

TEST(Io, KeyValueParsing) {
  auto e = parse_key_values("# c\nn = 4, 8\n\nprocess=two-choice # trailing\n");
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].key, "n");
  EXPECT_EQ(split_list(e[0].value), (std::vector<std::string>{"4", "8"}));
  EXPECT_EQ(e[1].value, "two-choice");
  EXPECT_THROW(parse_key_values("novalue\n"), ValidationError);
}

TEST(Io, CsvRoundTrip) {
  auto t = small_table();
  std::stringstream ss;
  write_csv(t, ss);
  auto back = read_csv(ss);
  EXPECT_TRUE(tables_equal(t, back));
}

TEST(Io, EmptyTableWritesHeaderOnly) {
  Table t;
  t.columns = {"a", "b"};
  std::ostringstream ss;
  write_csv(t, ss);
  EXPECT_EQ(ss.str(), "a,b\n");
}

TEST(Io, SvgIsDeterministic) {
  auto spec = PlotSpec::parse("x=n;y=gap;group=process;scale=log-x");
  auto a = render_svg(small_table(), spec);
  auto b = render_svg(small_table(), spec);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("<svg", 0), 0u);
  EXPECT_NE(a.find("</svg>"), std::string::npos);
}

TEST(Io, SvgRejectsMissingColumn) {
  auto spec = PlotSpec::parse("x=n;y=height");
  EXPECT_THROW(spec.validate(small_table()), ValidationError);
}

TEST(Io, FormatFraction) {
  EXPECT_EQ(format_fraction(0.25), "1/4");
  EXPECT_EQ(format_fraction(2.0), "2");
}

TEST(Cli, VectorOutput) {
  std::string out, err;
  ASSERT_EQ(cli({"vector", "two-choice", "4"}, out, err), kExitOk) << err;
  EXPECT_EQ(out, "0.0625,0.1875,0.3125,0.4375\nC1: pass (δ=1/4, ε=1/2), C2: pass (C=2)\n");
}

TEST(Cli, ConductanceOutput) {
  std::string out, err;
  ASSERT_EQ(cli({"conductance", "--build", "complete", "--n", "4"}, out, err), kExitOk) << err;
  EXPECT_EQ(out, "phi = 0.666667 (exact)\n");
}

TEST(Cli, UnknownSubcommandIsValidationError) {
  std::string out, err;
  EXPECT_EQ(cli({"frobnicate"}, out, err), kExitValidation);
}

TEST(Cli, DriftCheckOutsideC1FailsPrecondition) {
  std::string out, err;
  int rc = cli({"drift-check", BALLOC_SOURCE_DIR "/configs/drift_violates_c1.cfg", "-o", "/dev/null"}, out, err);
  EXPECT_EQ(rc, kExitValidation);
  EXPECT_NE(err.find("precondition failed"), std::string::npos);
}

TEST(Selftest, AllPropertiesPass) {
  auto results = run_selftest();
  EXPECT_EQ(results.size(), selftest_names().size());
  for (const auto& r : results) EXPECT_TRUE(r.pass) << r.module << "." << r.name << ": " << r.detail;
}
