#include <gtest/gtest.h>

#include <clocale>
#include <locale>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "copte/ingest.hpp"
#include "pm25_fixture.hpp"

using namespace copte;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no copte::Error thrown";
  return ErrorCode::IoError;
}

std::vector<Pm25Record> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_pm25_csv(in);
}

struct CapturedWarnings {
  WarningHandler saved = warning_handler();
  std::vector<std::string> seen;
  CapturedWarnings() {
    set_warning_handler([this](std::string_view m) { seen.emplace_back(m); });
  }
  ~CapturedWarnings() { set_warning_handler(saved); }
};

const std::string kTwoRows = std::string(kPm25Header) +
                             "\n"
                             "1,2010,1,1,0,NA,-21,-11,1021,NW,1.79,0,0\n"
                             "2,2010,1,1,1,129,-16,-4,1020,SE,1.79,0,0\n";

}  // namespace

TEST(HourStamp, ParseAndFormat) {
  EXPECT_EQ(HourStamp::parse("2010-01-01").hours, HourStamp::from_civil(2010, 1, 1, 0).hours);
  EXPECT_EQ(HourStamp::parse("2012-02-29T13"), HourStamp::from_civil(2012, 2, 29, 13));
  EXPECT_EQ(HourStamp::parse("2012-02-29 13"), HourStamp::from_civil(2012, 2, 29, 13));
  EXPECT_EQ(HourStamp::from_civil(2014, 12, 31, 23).to_string(), "2014-12-31T23");
  EXPECT_EQ((HourStamp::from_civil(2010, 12, 31, 23) + 1).to_string(), "2011-01-01T00");
  EXPECT_EQ(HourStamp::from_civil(1969, 12, 31, 22).to_string(), "1969-12-31T22");
  EXPECT_EQ(code_of([] { HourStamp::parse("2010/01/01"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { HourStamp::parse("2011-02-29"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { HourStamp::parse("2011-02-01T24"); }), ErrorCode::InvalidArgument);
}

TEST(ParsePm25, NaBecomesMissing) {
  const auto recs = parse(kTwoRows);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_FALSE(recs[0].pm25.has_value());
  EXPECT_EQ(recs[0].dewp, -21.0);
  EXPECT_EQ(recs[0].cbwd, "NW");
  EXPECT_EQ(recs[1].pm25, 129.0);
  EXPECT_EQ(recs[1].iws, 1.79);
  EXPECT_EQ(recs[1].stamp().to_string(), "2010-01-01T01");
}

TEST(ParsePm25, AcceptsBomAndCrlf) {
  std::string text = "\xEF\xBB\xBF" + kTwoRows;
  std::string crlf;
  for (char c : text) {
    if (c == '\n') crlf += '\r';
    crlf += c;
  }
  EXPECT_EQ(parse(crlf), parse(kTwoRows));
}

TEST(ParsePm25, SchemaMismatchOnRenamedColumn) {
  const std::string text = "No,year,month,day,hour,PM25,DEWP,TEMP,PRES,cbwd,Iws,Is,Ir\n";
  try {
    parse(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
    EXPECT_NE(std::string(e.what()).find("PM25"), std::string::npos);
  }
  EXPECT_EQ(code_of([] { parse(""); }), ErrorCode::SchemaMismatch);
}

TEST(ParsePm25, MalformedRows) {
  const std::string header = std::string(kPm25Header) + "\n";
  EXPECT_EQ(code_of([&] { parse(header + "1,2010,1,1,0,NA,-21,-11,1021,NW,1.79,0\n"); }),
            ErrorCode::MalformedRow);
  EXPECT_EQ(code_of([&] { parse(header + "1,2010,1,1,0,abc,-21,-11,1021,NW,1.79,0,0\n"); }),
            ErrorCode::MalformedRow);
  EXPECT_EQ(code_of([&] { parse(header + "1,2010,13,1,0,1,-21,-11,1021,NW,1.79,0,0\n"); }),
            ErrorCode::MalformedRow);
  EXPECT_EQ(code_of([&] { parse(header + "1,2010,2,30,0,1,-21,-11,1021,NW,1.79,0,0\n"); }),
            ErrorCode::MalformedRow);
  try {
    parse(header + "1,2010,1,1,0,1,-21,-11,1021,NW,1.79,0,0\n2,2010,1,1,1,x,1,1,1,NW,1,0,0\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(ParsePm25, NonMonotonicTime) {
  const std::string header = std::string(kPm25Header) + "\n";
  const std::string gap = header + "1,2010,1,1,0,1,1,1,1,NW,1,0,0\n2,2010,1,1,2,1,1,1,1,NW,1,0,0\n";
  const std::string back = header + "1,2010,1,1,5,1,1,1,1,NW,1,0,0\n2,2010,1,1,4,1,1,1,1,NW,1,0,0\n";
  EXPECT_EQ(code_of([&] { parse(gap); }), ErrorCode::NonMonotonicTime);
  EXPECT_EQ(code_of([&] { parse(back); }), ErrorCode::NonMonotonicTime);
}

TEST(ParsePm25, FullFiveYearFixture) {
  const auto recs = parse(fixtures::pm25_csv(43824, {0, 1, 2, 30000}));
  ASSERT_EQ(recs.size(), 43824u);
  EXPECT_EQ(recs.front().stamp().to_string(), "2010-01-01T00");
  EXPECT_EQ(recs.back().stamp().to_string(), "2014-12-31T23");
  EXPECT_EQ(recs.back().row_no, 43824);
  EXPECT_FALSE(recs[30000].pm25.has_value());
  EXPECT_TRUE(recs[30001].pm25.has_value());
}

TEST(ParsePm25, MissingFileIsIoError) {
  EXPECT_EQ(code_of([] { parse_pm25_csv(std::string("/nonexistent/pm25.csv")); }),
            ErrorCode::IoError);
}

TEST(SelectWindow, FirstCompleteRunSkipsMissing) {
  const auto recs = parse(fixtures::pm25_csv(10, {2}));
  EXPECT_EQ(select_window(recs, FirstCompleteRun{5}), (CompleteWindow{3, 5}));
  EXPECT_EQ(select_window(recs, FirstCompleteRun{2}), (CompleteWindow{0, 2}));
  EXPECT_EQ(code_of([&] { select_window(recs, FirstCompleteRun{8}); }), ErrorCode::NoCompleteRun);
  EXPECT_EQ(code_of([&] { select_window(recs, FirstCompleteRun{0}); }), ErrorCode::InvalidArgument);
}

TEST(SelectWindow, RequiredColumnsWidenCompleteness) {
  std::string text = fixtures::pm25_csv(6);
  // Blank TEMP on the second record.
  std::istringstream in(text);
  std::string out, line;
  int n = 0;
  while (std::getline(in, line)) {
    if (n == 2) {
      auto f = detail::split_fields(line);
      std::string rebuilt;
      for (std::size_t i = 0; i < f.size(); ++i) {
        rebuilt += (i ? "," : "") + (i == 7 ? std::string("NA") : std::string(f[i]));
      }
      line = rebuilt;
    }
    out += line + "\n";
    ++n;
  }
  const auto recs = parse(out);
  EXPECT_EQ(select_window(recs, FirstCompleteRun{4}), (CompleteWindow{0, 4}));
  EXPECT_EQ(select_window(recs, FirstCompleteRun{4}, {"pm2.5", "TEMP"}), (CompleteWindow{2, 4}));
  EXPECT_EQ(code_of([&] { select_window(recs, FirstCompleteRun{4}, {"cbwd"}); }),
            ErrorCode::CategoricalColumnRequested);
  EXPECT_EQ(code_of([&] { select_window(recs, FirstCompleteRun{4}, {"wind"}); }),
            ErrorCode::UnknownColumn);
}

TEST(SelectWindow, DateRangeInclusive) {
  const auto recs = parse(fixtures::pm25_csv(72));
  const ByDateRange range{HourStamp::parse("2010-01-02T00"), HourStamp::parse("2010-01-02T23"), {}};
  EXPECT_EQ(select_window(recs, range), (CompleteWindow{24, 24}));
}

TEST(SelectWindow, DateRangeWithCountWarnsAboutActualEnd) {
  CapturedWarnings warnings;
  const auto recs = parse(fixtures::pm25_csv(72));
  const ByDateRange range{HourStamp::parse("2010-01-01"), HourStamp::parse("2010-01-02"), 30};
  EXPECT_EQ(select_window(recs, range), (CompleteWindow{0, 30}));
  ASSERT_EQ(warnings.seen.size(), 1u);
  EXPECT_NE(warnings.seen[0].find("2010-01-02T05"), std::string::npos);

  const ByDateRange exact{HourStamp::parse("2010-01-01"), HourStamp::parse("2010-01-01T09"), 10};
  EXPECT_EQ(select_window(recs, exact), (CompleteWindow{0, 10}));
  EXPECT_EQ(warnings.seen.size(), 1u);
}

TEST(SelectWindow, DateRangeErrors) {
  const auto recs = parse(fixtures::pm25_csv(48, {30}));
  const auto window = [&](const char* a, const char* b) {
    return ByDateRange{HourStamp::parse(a), HourStamp::parse(b), {}};
  };
  EXPECT_EQ(code_of([&] { select_window(recs, window("2010-01-02", "2010-01-02T10")); }),
            ErrorCode::WindowHasMissing);
  EXPECT_EQ(code_of([&] { select_window(recs, window("2010-01-02", "2010-01-01")); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { select_window(recs, window("2011-01-01", "2011-02-01")); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] {
              select_window(recs, ByDateRange{HourStamp::parse("2010-01-02"),
                                              HourStamp::parse("2010-01-03"), 100});
            }),
            ErrorCode::InvalidArgument);
}

TEST(SelectWindow, WindowNeverContainsMissingValues) {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    std::set<std::size_t> missing;
    std::uniform_int_distribution<std::size_t> pos(0, 499);
    const int holes = static_cast<int>(rng() % 30);
    for (int h = 0; h < holes; ++h) missing.insert(pos(rng));
    const auto recs = parse(fixtures::pm25_csv(500, missing));
    const std::size_t n = 1 + rng() % 60;
    try {
      const auto w = select_window(recs, FirstCompleteRun{n});
      ASSERT_EQ(w.length, n);
      for (std::size_t i = w.start_index; i < w.start_index + w.length; ++i) {
        ASSERT_TRUE(recs[i].pm25.has_value());
      }
      // Earliest: no complete run of n ends before this one starts.
      if (w.start_index > 0) {
        ASSERT_FALSE(recs[w.start_index - 1].pm25.has_value());
      }
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::NoCompleteRun);
    }
  }
}

TEST(ToSeriesMatrix, ColumnsInRequestedOrder) {
  const auto recs = parse(fixtures::pm25_csv(20, {1}));
  const CompleteWindow w{4, 6};
  const auto m = to_series_matrix(recs, w, {"TEMP", "pm2.5", "Iws"});
  ASSERT_EQ(m.rows(), 6u);
  EXPECT_EQ(m.labels(), (std::vector<std::string>{"TEMP", "pm2.5", "Iws"}));
  for (std::size_t r = 0; r < 6; ++r) {
    EXPECT_EQ(m(r, 0), *recs[4 + r].temp);
    EXPECT_EQ(m(r, 1), *recs[4 + r].pm25);
    EXPECT_EQ(m(r, 2), *recs[4 + r].iws);
  }
  EXPECT_EQ(code_of([&] { to_series_matrix(recs, w, {"cbwd"}); }),
            ErrorCode::CategoricalColumnRequested);
  EXPECT_EQ(code_of([&] { to_series_matrix(recs, w, {"PM25"}); }), ErrorCode::UnknownColumn);
  EXPECT_EQ(code_of([&] { to_series_matrix(recs, CompleteWindow{0, 4}, {"pm2.5"}); }),
            ErrorCode::WindowHasMissing);
}

TEST(ToSeriesMatrix, DecimalValuesRoundTripExactly) {
  const std::string text = std::string(kPm25Header) +
                           "\n1,2013,3,1,0,57,-12,0.1,1030.3,NW,4.92,0,0\n"
                           "2,2013,3,1,1,63,-11,-0.7,1030.25,cv,0.89,0,0\n";
  const auto recs = parse(text);
  const auto m = to_series_matrix(recs, select_window(recs, FirstCompleteRun{2}),
                                  {"TEMP", "PRES", "Iws"});
  EXPECT_EQ(m(0, 0), 0.1);
  EXPECT_EQ(m(1, 0), -0.7);
  EXPECT_EQ(m(1, 1), 1030.25);
  EXPECT_EQ(m(0, 2), 4.92);
}

TEST(ParsePm25, IndependentOfGlobalLocale) {
  struct CommaDecimal : std::numpunct<char> {
    char do_decimal_point() const override { return ','; }
    char do_thousands_sep() const override { return '.'; }
    std::string do_grouping() const override { return "\3"; }
  };
  const std::string text = fixtures::pm25_csv(50);
  const auto reference = parse(text);
  const std::locale saved = std::locale::global(std::locale(std::locale::classic(), new CommaDecimal));
  // A C-level comma locale as well, when the system has one.
  const std::string c_saved = std::setlocale(LC_NUMERIC, nullptr);
  for (const char* name : {"de_DE.UTF-8", "fr_FR.UTF-8", "de_DE.utf8"}) {
    if (std::setlocale(LC_NUMERIC, name) != nullptr) break;
  }
  const auto under_locale = parse(text);
  std::istringstream in("x,y\n1.5,1030.25\n");
  const auto table = read_numeric_csv(in);
  std::setlocale(LC_NUMERIC, c_saved.c_str());
  std::locale::global(saved);
  EXPECT_EQ(under_locale, reference);
  EXPECT_EQ(table(0, 0), 1.5);
  EXPECT_EQ(table(0, 1), 1030.25);
}

TEST(ReadNumericCsv, HeaderedTable) {
  std::istringstream in("x,y\n1.5,2\n-3,4e-2\n");
  const auto m = read_numeric_csv(in);
  EXPECT_EQ(m.labels(), (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(m(1, 1), 0.04);
  std::istringstream bad("x,y\n1,NA\n");
  EXPECT_EQ(code_of([&] { read_numeric_csv(bad); }), ErrorCode::MalformedRow);
  std::istringstream ragged("x,y\n1\n");
  EXPECT_EQ(code_of([&] { read_numeric_csv(ragged); }), ErrorCode::MalformedRow);
  std::istringstream empty("");
  EXPECT_EQ(code_of([&] { read_numeric_csv(empty); }), ErrorCode::EmptyInput);
  std::istringstream dup("x,x\n1,2\n");
  EXPECT_EQ(code_of([&] { read_numeric_csv(dup); }), ErrorCode::DuplicateLabel);
}

TEST(SelectColumns, ReordersAndRejectsUnknown) {
  std::istringstream in("a,b,c\n1,2,3\n4,5,6\n");
  const auto m = read_numeric_csv(in);
  const auto s = select_columns(m, {"c", "a"});
  EXPECT_EQ(s.column(0), (std::vector<double>{3, 6}));
  EXPECT_EQ(s.labels(), (std::vector<std::string>{"c", "a"}));
  EXPECT_EQ(code_of([&] { select_columns(m, {"d"}); }), ErrorCode::UnknownColumn);
}
