#include "kgforge/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

#include "eval_internal.hpp"

namespace kgforge {

namespace {

// Scores four consecutive entity rows against q. Each lane is the same
// left-to-right sum as dot(), so lane results equal dot(q, row) exactly.
inline void dot4(const double* q, const double* rows, std::size_t w, double out[4]) {
  const double* e0 = rows;
  const double* e1 = rows + w;
  const double* e2 = rows + 2 * w;
  const double* e3 = rows + 3 * w;
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (std::size_t i = 0; i < w; ++i) {
    const double qi = q[i];
    s0 += qi * e0[i];
    s1 += qi * e1[i];
    s2 += qi * e2[i];
    s3 += qi * e3[i];
  }
  out[0] = s0;
  out[1] = s1;
  out[2] = s2;
  out[3] = s3;
}

void build_query(const EmbeddingTable& table, const Triple& t, Side side, std::span<double> q) {
  const auto r = table.relation(RelationModule::tri, t.relation);
  if (side == Side::tail) {
    tail_query(table.type(), table.entity(t.head), r, q);
  } else {
    head_query(table.type(), r, table.entity(t.tail), q);
  }
}

}  // namespace

double rank_triple(const EmbeddingTable& table, const Triple& triple, Side side,
                   const FilterSet& filter, TiePolicy tie) {
  const std::size_t w = table.entity_width();
  std::vector<double> q(w);
  build_query(table, triple, side, q);

  const EntityId gold = entity_at(triple, side);
  const double gold_score = dot(q, table.entity(gold));
  const auto known = side == Side::tail ? filter.known_tails(triple.head, triple.relation)
                                        : filter.known_heads(triple.relation, triple.tail);

  const auto n = static_cast<EntityId>(table.n_entities());
  const double* base = table.entity_data().data();
  std::size_t greater = 0;
  std::size_t ties = 0;
  std::size_t next_known = 0;

  auto tally = [&](EntityId e, double s) {
    while (next_known < known.size() && known[next_known] < e) ++next_known;
    const bool filtered = next_known < known.size() && known[next_known] == e;
    if (e == gold || filtered) return;
    if (s > gold_score) ++greater;
    else if (s == gold_score) ++ties;
  };

  EntityId e = 0;
  double block[4];
  for (; e + 4 <= n; e += 4) {
    dot4(q.data(), base + static_cast<std::size_t>(e) * w, w, block);
    for (int k = 0; k < 4; ++k) tally(e + k, block[k]);
  }
  for (; e < n; ++e) tally(e, dot(q, table.entity(e)));

  return detail::tie_adjusted_rank(greater, ties, tie);
}

Metrics metrics_from_ranks(std::span<const double> ranks) {
  Metrics m;
  m.count = ranks.size();
  if (ranks.empty()) return m;
  double h1 = 0, h3 = 0, h10 = 0, rr = 0;
  for (double r : ranks) {
    h1 += r <= 1.0 ? 1.0 : 0.0;
    h3 += r <= 3.0 ? 1.0 : 0.0;
    h10 += r <= 10.0 ? 1.0 : 0.0;
    rr += 1.0 / r;
  }
  const double n = static_cast<double>(ranks.size());
  m.hits1 = h1 / n;
  m.hits3 = h3 / n;
  m.hits10 = h10 / n;
  m.mrr = rr / n;
  return m;
}

std::vector<RelationRow> per_relation_report(std::span<const Triple> test,
                                             std::span<const double> head_ranks,
                                             std::span<const double> tail_ranks) {
  std::map<RelationId, RelationRow> rows;
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto& row = rows[test[i].relation];
    row.relation = test[i].relation;
    ++row.count;
    if (!head_ranks.empty() && head_ranks[i] <= 1.0) ++row.hits1_head_count;
    if (!tail_ranks.empty() && tail_ranks[i] <= 1.0) ++row.hits1_tail_count;
  }
  std::vector<RelationRow> out;
  out.reserve(rows.size());
  for (auto& [r, row] : rows) {
    const double n = static_cast<double>(row.count);
    row.hits1_head = static_cast<double>(row.hits1_head_count) / n;
    row.hits1_tail = static_cast<double>(row.hits1_tail_count) / n;
    out.push_back(row);
  }
  return out;
}

namespace detail {

void finish_report(EvalReport& report, std::span<const Triple> test) {
  report.tail = metrics_from_ranks(report.tail_ranks);
  if (report.mode == RankMode::both_sides) {
    report.head = metrics_from_ranks(report.head_ranks);
    std::vector<double> all;
    all.reserve(2 * test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      all.push_back(report.head_ranks[i]);
      all.push_back(report.tail_ranks[i]);
    }
    report.overall = metrics_from_ranks(all);
  } else {
    report.head = Metrics{};
    report.overall = report.tail;
  }
  report.per_relation = per_relation_report(test, report.head_ranks, report.tail_ranks);
}

}  // namespace detail

EvalReport evaluate(const EmbeddingTable& table, std::span<const Triple> test,
                    const FilterSet& filter, RankMode mode, TiePolicy tie) {
  if (test.empty()) throw DataError("empty evaluation split");
  EvalReport report;
  report.mode = mode;
  report.tie = tie;
  const bool both = mode == RankMode::both_sides;
  report.tail_ranks.assign(test.size(), 0.0);
  if (both) report.head_ranks.assign(test.size(), 0.0);

  const auto n = static_cast<std::int64_t>(test.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    report.tail_ranks[k] = rank_triple(table, test[k], Side::tail, filter, tie);
    if (both) report.head_ranks[k] = rank_triple(table, test[k], Side::head, filter, tie);
  }
  detail::finish_report(report, test);
  return report;
}

std::vector<RelationGain> compare_relations(const EvalReport& a, const EvalReport& b) {
  require(a.per_relation.size() == b.per_relation.size(),
          "compare: reports cover different relations");
  std::vector<RelationGain> gains;
  gains.reserve(a.per_relation.size());
  for (std::size_t i = 0; i < a.per_relation.size(); ++i) {
    const auto& ra = a.per_relation[i];
    const auto& rb = b.per_relation[i];
    require(ra.relation == rb.relation && ra.count == rb.count,
            "compare: reports cover different test sets");
    gains.push_back({ra.relation, ra.count, ra.hits1_head_count, ra.hits1_tail_count,
                     rb.hits1_head_count, rb.hits1_tail_count});
  }
  std::stable_sort(gains.begin(), gains.end(), [](const RelationGain& x, const RelationGain& y) {
    if (x.gain() != y.gain()) return x.gain() > y.gain();
    return x.relation < y.relation;
  });
  return gains;
}

std::vector<Improvement> rank1_gained(std::span<const Triple> test, const EvalReport& a,
                                      const EvalReport& b) {
  require(a.tail_ranks.size() == test.size() && b.tail_ranks.size() == test.size() &&
              a.head_ranks.size() == b.head_ranks.size(),
          "rank1_gained: reports do not match the test split");
  std::vector<Improvement> out;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (!a.head_ranks.empty() && b.head_ranks[i] <= 1.0 && a.head_ranks[i] > 1.0) {
      out.push_back({i, test[i], Side::head, a.head_ranks[i], b.head_ranks[i]});
    }
    if (b.tail_ranks[i] <= 1.0 && a.tail_ranks[i] > 1.0) {
      out.push_back({i, test[i], Side::tail, a.tail_ranks[i], b.tail_ranks[i]});
    }
  }
  return out;
}

namespace {
void metric_line(std::ostringstream& out, const char* label, const Metrics& m) {
  out << std::left << std::setw(10) << label << std::right << std::fixed << std::setprecision(4)
      << std::setw(9) << m.hits1 << std::setw(9) << m.hits3 << std::setw(9) << m.hits10
      << std::setw(9) << m.mrr << std::setw(10) << m.count << '\n';
}
}  // namespace

std::string format_report_text(const EvalReport& report) {
  std::ostringstream out;
  out << "mode: " << (report.mode == RankMode::both_sides ? "both" : "tail-only")
      << "  tie: " << tie_name(report.tie) << '\n';
  out << std::left << std::setw(10) << "" << std::right << std::setw(9) << "h@1" << std::setw(9)
      << "h@3" << std::setw(9) << "h@10" << std::setw(9) << "MRR" << std::setw(10) << "ranks"
      << '\n';
  metric_line(out, "overall", report.overall);
  if (report.mode == RankMode::both_sides) metric_line(out, "head", report.head);
  metric_line(out, "tail", report.tail);
  return out.str();
}

std::string format_metrics_tsv(const EvalReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "metric\tvalue\n";
  auto emit = [&](const std::string& prefix, const Metrics& m) {
    out << prefix << "hits@1\t" << m.hits1 << '\n'
        << prefix << "hits@3\t" << m.hits3 << '\n'
        << prefix << "hits@10\t" << m.hits10 << '\n'
        << prefix << "mrr\t" << m.mrr << '\n';
  };
  emit("", report.overall);
  if (report.mode == RankMode::both_sides) emit("head_", report.head);
  emit("tail_", report.tail);
  return out.str();
}

std::string format_per_relation_tsv(const EvalReport& report, const Vocab& vocab) {
  std::ostringstream out;
  out.precision(6);
  out << "relation\tcount\thits@1_head\thits@1_tail\n";
  for (const auto& row : report.per_relation) {
    out << vocab.relation_name(row.relation) << '\t' << row.count << '\t' << row.hits1_head
        << '\t' << row.hits1_tail << '\n';
  }
  return out.str();
}

std::string format_gain_tsv(std::span<const RelationGain> gains, const Vocab& vocab) {
  std::ostringstream out;
  out << "relation\tcount\ta_hits1_head\ta_hits1_tail\tb_hits1_head\tb_hits1_tail\tgain_head\t"
         "gain_tail\tgain\n";
  for (const auto& g : gains) {
    out << vocab.relation_name(g.relation) << '\t' << g.count << '\t' << g.a_head << '\t'
        << g.a_tail << '\t' << g.b_head << '\t' << g.b_tail << '\t' << g.gain_head() << '\t'
        << g.gain_tail() << '\t' << g.gain() << '\n';
  }
  return out.str();
}

std::string format_improvements_tsv(std::span<const Improvement> items, const Vocab& vocab) {
  std::ostringstream out;
  out << "index\thead\trelation\ttail\tside\trank_a\trank_b\n";
  for (const auto& it : items) {
    out << it.index << '\t' << vocab.entity_name(it.triple.head) << '\t'
        << vocab.relation_name(it.triple.relation) << '\t' << vocab.entity_name(it.triple.tail)
        << '\t' << (it.side == Side::head ? "head" : "tail") << '\t' << it.rank_a << '\t'
        << it.rank_b << '\n';
  }
  return out.str();
}

}  // namespace kgforge
