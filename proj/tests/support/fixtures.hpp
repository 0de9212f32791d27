#pragma once

// Shared SQL fixtures for the unit and acceptance suites.

#include <array>
#include <string>
#include <vector>

#include "cqms/sql/schema.hpp"

namespace fixtures {

inline constexpr const char* kFigure1MetaQuery =
    "SELECT Q.qid, Q.qText\n"
    "FROM   Queries Q, Attributes A1, Attributes A2\n"
    "WHERE  Q.qid = A1.qid AND Q.qid = A2.qid\n"
    "       AND A1.attrName = 'salinity'\n"
    "       AND A1.relName = 'WaterSalinity'\n"
    "       AND A2.attrName = 'temp'\n"
    "       AND A2.relName = 'WaterTemp'";

inline constexpr std::array kRoundTripCorpus = {
    "SELECT * FROM t",
    "select * from WATERTEMP where 18 > temp",
    "SELECT Q.qid, Q.qText FROM Queries Q, Attributes A1 WHERE Q.qid = A1.qid AND "
    "A1.attrName = 'salinity'",
    "SELECT DISTINCT w.lake, count(*) AS n FROM WaterTemp w JOIN WaterSalinity s ON w.lake = "
    "s.lake WHERE w.temp BETWEEN 10 AND 20 AND s.salinity IN (3, 1, 2) GROUP BY w.lake HAVING "
    "count(*) > 2 ORDER BY n DESC LIMIT 10",
    "SELECT a FROM t WHERE (x = 1 OR y = 2) AND NOT z LIKE 'a''b%'",
    "SELECT a FROM t WHERE x = 1 OR y = 2 AND z = 3",
    "SELECT \"MixedCase\".\"Col\" FROM \"MixedCase\" WHERE \"Col\" >= 1.5e3",
    "SELECT a FROM t WHERE a > (SELECT avg(b) FROM u)",
    "SELECT a FROM t WHERE EXISTS (SELECT 1 FROM u WHERE u.k = t.k) AND b <> -4",
    "SELECT sum(DISTINCT x) FROM t LEFT JOIN u ON t.k = u.k CROSS JOIN v",
    "SELECT a FROM t WHERE b = ? AND c < ?",
    "SELECT lake, temp FROM WaterTemp WHERE temp < 18.0 AND depth < 010",
};

/// Lakes schema used by the feature, session and suggestion scenarios.
inline cqms::sql::SchemaSnapshot lakes_schema(cqms::EpochMs at = 0) {
  cqms::sql::SchemaSnapshot s;
  s.effective_at = at;
  s.relations["watertemp"] = {{"lake", "text"}, {"temp", "real"}, {"depth", "real"}};
  s.relations["watersalinity"] = {{"lake", "text"}, {"salinity", "real"}};
  s.relations["citylocations"] = {{"city", "text"}, {"lake", "text"}};
  return s;
}

/// The six-step session: add WaterSalinity, try two more conditions on temp
/// ending at temp < 18, then add two more predicates.
inline const std::vector<std::string>& figure2_session() {
  static const std::vector<std::string> kSteps = {
      "SELECT * FROM WaterTemp WHERE temp < 22",
      "SELECT * FROM WaterTemp, WaterSalinity WHERE temp < 22",
      "SELECT * FROM WaterTemp, WaterSalinity WHERE temp < 20",
      "SELECT * FROM WaterTemp, WaterSalinity WHERE temp < 18",
      "SELECT * FROM WaterTemp, WaterSalinity WHERE temp < 18 AND salinity > 30",
      "SELECT * FROM WaterTemp, WaterSalinity WHERE temp < 18 AND salinity > 30 AND depth < 10",
  };
  return kSteps;
}

}  // namespace fixtures
