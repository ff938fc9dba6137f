#include <gtest/gtest.h>

#include "ecc/ecc.hpp"
#include "oracles.hpp"

using namespace ecc;

namespace {

std::vector<AnnotatedDocument> fixture_docs() {
  return load_annotated(oracle::read_fixture("annotated_fixture.jsonl"), /*strict=*/true).documents;
}

const AnnotatedDocument& doc_by_id(const std::vector<AnnotatedDocument>& docs,
                                   const std::string& id) {
  for (const auto& doc : docs)
    if (doc.doc_id == id) return doc;
  throw std::runtime_error("no such doc: " + id);
}

KnowledgeTemplate simple_template(const std::string& holder, const std::string& property,
                                  const std::string& action, const std::string& first,
                                  const std::string& second) {
  KnowledgeTemplate t;
  t.holder = holder;
  t.property = property;
  t.action = action;
  t.first_arg = first;
  t.second_arg = second;
  return t;
}

}  // namespace

TEST(Polarity, NegArcFlipsTheAntecedent) {
  auto docs = fixture_docs();
  const auto& d5 = doc_by_id(docs, "d5");
  EXPECT_FALSE(detect_polarity(d5.sentences[0], 3));  // did not see
  EXPECT_TRUE(detect_polarity(d5.sentences[1], 1));   // avoided
}

TEST(Templates, ForwardRelationBuildsConditionFromFirstEvent) {
  auto docs = fixture_docs();
  const auto& d1 = doc_by_id(docs, "d1");
  auto pairs = extract_document_pairs(d1);
  ASSERT_EQ(pairs.size(), 1u);

  auto t = template_from_pair(d1, {pairs[0], RelationLabel::Before});
  EXPECT_EQ(t.holder, "ball");
  EXPECT_EQ(t.property, "throw");
  EXPECT_TRUE(t.polarity);
  EXPECT_EQ(t.action, "hit");
  EXPECT_EQ(t.holder_role, Role::Subj);
  EXPECT_EQ(t.first_arg, "ball");
  EXPECT_EQ(t.first_role, Role::Subj);
  EXPECT_EQ(t.second_arg, "william");
  EXPECT_EQ(t.second_role, Role::Obj);
  EXPECT_FALSE(t.pmi.has_value());

  EXPECT_EQ(render_template(t), "ball.throw = true may cause execution of hit [ball, william]");
  EXPECT_EQ(render_generalized(t),
            "ball_subject.throw = true may cause execution of hit [william_object, ball_subject]");
}

TEST(Templates, ReversedRelationSwapsConditionAndAction) {
  auto docs = fixture_docs();
  const auto& d1 = doc_by_id(docs, "d1");
  auto pairs = extract_document_pairs(d1);
  ASSERT_EQ(pairs.size(), 1u);

  auto t = template_from_pair(d1, {pairs[0], RelationLabel::After});
  EXPECT_EQ(t.holder, "ball");
  EXPECT_EQ(t.property, "hit");
  EXPECT_EQ(t.action, "throw");
  EXPECT_EQ(t.holder_role, Role::Obj);
  EXPECT_EQ(t.first_arg, "john");
  EXPECT_EQ(t.first_role, Role::Subj);
  EXPECT_EQ(t.second_arg, "ball");
  EXPECT_EQ(t.second_role, Role::Obj);
  EXPECT_EQ(render_generalized(t),
            "ball_object.hit = true may cause execution of throw [ball_object, john_subject]");
}

TEST(Templates, AdjectivalEventsRenderByteForByte) {
  auto docs = fixture_docs();
  const auto& d2 = doc_by_id(docs, "d2");
  // The sick/absent pair fails the two-actor filter (sick has no object), so
  // build it from the unfiltered pairing.
  auto mentions = extract_event_mentions(d2, {});
  auto pairs = pair_events_by_protagonist(d2, mentions, {});
  ASSERT_EQ(pairs.size(), 1u);

  auto t = template_from_pair(d2, {pairs[0], RelationLabel::Before});
  EXPECT_EQ(render_template(t),
            "tommy.sick = true may cause execution of absent [tommy, school]");
  EXPECT_EQ(render_generalized(t),
            "tommy_subject.sick = true may cause execution of absent [school_object, tommy_subject]");
}

TEST(Templates, NegatedAntecedentRendersFalse) {
  auto docs = fixture_docs();
  const auto& d5 = doc_by_id(docs, "d5");
  auto pairs = extract_document_pairs(d5);
  ASSERT_EQ(pairs.size(), 2u);

  auto t = template_from_pair(d5, {pairs[0], RelationLabel::Before});
  EXPECT_FALSE(t.polarity);
  EXPECT_EQ(render_template(t), "kevin.see = false may cause execution of avoid [kevin, hole]");
}

TEST(Templates, OneArgumentConsequentIsRejected) {
  auto docs = fixture_docs();
  const auto& d2 = doc_by_id(docs, "d2");
  auto mentions = extract_event_mentions(d2, {});
  auto pairs = pair_events_by_protagonist(d2, mentions, {});
  ASSERT_EQ(pairs.size(), 1u);
  // Reversed, the consequent is "sick", which has only a subject.
  EXPECT_THROW(template_from_pair(d2, {pairs[0], RelationLabel::After}), ValidationError);
}

TEST(Templates, PmiComesFromTheGraphWhenPresent) {
  auto docs = fixture_docs();
  const auto& d1 = doc_by_id(docs, "d1");
  auto pairs = extract_document_pairs(d1);
  ASSERT_EQ(pairs.size(), 1u);

  std::vector<UnorderedEventPair> all_pairs;
  for (const auto& doc : docs) {
    auto kept = extract_document_pairs(doc);
    all_pairs.insert(all_pairs.end(), kept.begin(), kept.end());
  }
  auto table = count_pairs(all_pairs);
  auto graph = build_graph(table, 1);
  auto t = template_from_pair(d1, {pairs[0], RelationLabel::Before}, &graph);
  ASSERT_TRUE(t.pmi.has_value());
  EXPECT_NEAR(*t.pmi, std::log(10.0), 1e-12);  // the repeated throw/hit edge
}

TEST(TemplateText, ParseInvertsRendering) {
  auto t = simple_template("ball", "throw", "hit", "ball", "william");
  t.holder_role = Role::Subj;
  t.first_role = Role::Subj;
  t.second_role = Role::Obj;
  auto parsed = parse_template(render_template(t), render_generalized(t));
  EXPECT_EQ(parsed, t);

  // Flipped argument order round-trips too.
  auto u = simple_template("ball", "hit", "throw", "john", "ball");
  u.holder_role = Role::Obj;
  u.first_role = Role::Subj;
  u.second_role = Role::Obj;
  EXPECT_EQ(parse_template(render_template(u), render_generalized(u)), u);

  auto v = simple_template("man", "drunk", "drive", "man", "car");
  v.polarity = false;
  EXPECT_EQ(parse_template(render_template(v), render_generalized(v)), v);
}

TEST(TemplateText, EveryFixtureLinePairRoundTrips) {
  auto lines = split_lines(oracle::read_fixture("wsc_kb/kb.txt"));
  std::vector<std::string> nonempty;
  for (const auto& line : lines)
    if (!line.empty()) nonempty.push_back(line);
  ASSERT_EQ(nonempty.size(), 18u);
  for (std::size_t i = 0; i < nonempty.size(); i += 2) {
    auto t = parse_template(nonempty[i], nonempty[i + 1]);
    EXPECT_EQ(render_template(t), nonempty[i]);
    EXPECT_EQ(render_generalized(t), nonempty[i + 1]);
  }
}

TEST(TemplateText, MalformedLinesAreRejected) {
  auto parse_one = [](const std::string& specific, const std::string& generalized) {
    return parse_template(specific, generalized);
  };
  const std::string good = "a.b = true may cause execution of c [x, y]";
  const std::string good_gen = "a_subject.b = true may cause execution of c [y_object, x_subject]";
  EXPECT_NO_THROW(parse_one(good, good_gen));

  EXPECT_THROW(parse_one("no dot here", good_gen), ParseError);
  EXPECT_THROW(parse_one("a.b = maybe may cause execution of c [x, y]", good_gen), ParseError);
  EXPECT_THROW(parse_one("a.b = true may cause execution of c [x]", good_gen), ParseError);
  EXPECT_THROW(parse_one("a.b = true may cause execution of c [x, y, z]", good_gen), ParseError);
  EXPECT_THROW(parse_one("a.b = true may cause execution of  [x, y]", good_gen), ParseError);
  // Generalized line missing the holder role suffix.
  EXPECT_THROW(parse_one(good, "a.b = true may cause execution of c [y_object, x_subject]"),
               ParseError);
  // Arguments must carry the object/subject suffixes in that order.
  EXPECT_THROW(parse_one(good, "a_subject.b = true may cause execution of c [x_subject, y_object]"),
               ParseError);
  // Lines that disagree on content.
  EXPECT_THROW(parse_one(good, "a_subject.b = true may cause execution of d [y_object, x_subject]"),
               ParseError);
  EXPECT_THROW(parse_one(good, "a_subject.b = false may cause execution of c [y_object, x_subject]"),
               ParseError);
  // Identical arguments cannot be assigned roles from the generalized line.
  EXPECT_THROW(parse_one("a.b = true may cause execution of c [x, x]",
                         "a_subject.b = true may cause execution of c [x_object, x_subject]"),
               ParseError);
}

TEST(KbBuild, MergesExactRepeatsAndSumsSupport) {
  auto t1 = simple_template("ball", "throw", "hit", "ball", "william");
  auto t2 = t1;
  t2.pmi = 2.302585;
  auto t3 = simple_template("kevin", "see", "avoid", "kevin", "hole");
  t3.polarity = false;

  auto result = build_knowledge_base({t1, t2, t3});
  ASSERT_EQ(result.kb.templates.size(), 2u);
  EXPECT_TRUE(result.review.empty());
  // Canonical order: action "avoid" sorts before "hit".
  EXPECT_EQ(result.kb.templates[0].id, "t000001");
  EXPECT_EQ(result.kb.templates[0].action, "avoid");
  EXPECT_EQ(result.kb.templates[1].id, "t000002");
  EXPECT_EQ(result.kb.templates[1].action, "hit");
  EXPECT_EQ(result.kb.templates[1].support, 2);
  ASSERT_TRUE(result.kb.templates[1].pmi.has_value());
  EXPECT_DOUBLE_EQ(*result.kb.templates[1].pmi, 2.302585);
}

TEST(KbBuild, PositiveTemplatesSortBeforeNegativeTwins) {
  auto pos = simple_template("man", "drunk", "drive", "man", "car");
  auto neg = pos;
  neg.polarity = false;
  auto result = build_knowledge_base({neg, pos});
  ASSERT_EQ(result.kb.templates.size(), 2u);
  EXPECT_TRUE(result.kb.templates[0].polarity);
  EXPECT_FALSE(result.kb.templates[1].polarity);
}

TEST(KbBuild, SupportAndAssociationGatesFillTheReviewQueue) {
  auto weak = simple_template("a", "b", "c", "x", "y");
  auto strong = simple_template("d", "e", "f", "x", "y");
  strong.support = 3;
  auto low_pmi = simple_template("g", "h", "i", "x", "y");
  low_pmi.support = 5;
  low_pmi.pmi = 0.5;
  auto unmeasured = simple_template("j", "k", "l", "x", "y");
  unmeasured.support = 5;

  auto result = build_knowledge_base({weak, strong, low_pmi, unmeasured},
                                     /*min_support=*/2, /*min_pmi=*/1.0);
  ASSERT_EQ(result.kb.templates.size(), 2u);
  EXPECT_EQ(result.kb.templates[0].action, "f");
  EXPECT_EQ(result.kb.templates[1].action, "l");  // no pmi measured -> gate passes
  ASSERT_EQ(result.review.size(), 2u);
  EXPECT_EQ(result.review[0].reason, "support 1 below minimum 2");
  EXPECT_EQ(result.review[1].reason, "pmi 0.500000 below minimum 1.000000");

  // The allowlist rescues a gated template by its lexical line.
  auto rescued = build_knowledge_base({weak, strong, low_pmi, unmeasured}, 2, 1.0,
                                      {render_template(weak)});
  EXPECT_EQ(rescued.kb.templates.size(), 3u);
  EXPECT_EQ(rescued.review.size(), 1u);
}

TEST(KbBuild, ReviewFileListsLineAndReason) {
  auto weak = simple_template("a", "b", "c", "x", "y");
  auto result = build_knowledge_base({weak}, 2);
  std::string review = serialize_kb_review(result.review);
  EXPECT_EQ(review,
            "a.b = true may cause execution of c [x, y]\tsupport 1 below minimum 2\n");
  EXPECT_EQ(load_allowlist("# note\n\na.b = true may cause execution of c [x, y]\n").size(), 1u);
}

TEST(KbQuery, FiltersByActionAndProperty) {
  auto t1 = simple_template("jim", "upset", "yell", "jim", "kevin");
  auto t2 = simple_template("kevin", "upset", "yell", "jim", "kevin");
  auto t3 = simple_template("trophy", "big", "fit", "trophy", "suitcase");
  auto result = build_knowledge_base({t1, t2, t3});
  auto hits = query_templates(result.kb, "yell", "upset");
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_TRUE(query_templates(result.kb, "yell", "big").empty());
  EXPECT_TRUE(query_templates(result.kb, "fit", "upset").empty());
}

TEST(KbFiles, FixtureBaseLoadsWithSidecarNumbers) {
  auto kb = load_knowledge_base(oracle::read_fixture("wsc_kb/kb.txt"),
                                oracle::read_fixture("wsc_kb/kb_meta.jsonl"));
  ASSERT_EQ(kb.templates.size(), 9u);

  std::vector<long long> supports;
  for (const auto& t : kb.templates) supports.push_back(t.support);
  EXPECT_EQ(supports, (std::vector<long long>{3, 1, 2, 2, 1, 1, 2, 1, 1}));

  const auto& jim = kb.templates[0];
  EXPECT_EQ(jim.id, "t000001");
  EXPECT_EQ(jim.holder, "jim");
  EXPECT_EQ(jim.property, "upset");
  EXPECT_EQ(jim.action, "yell");
  EXPECT_EQ(jim.holder_role, Role::Subj);
  ASSERT_TRUE(jim.pmi.has_value());
  EXPECT_NEAR(*jim.pmi, 1.386294, 1e-9);
  EXPECT_FALSE(kb.templates[1].pmi.has_value());
  ASSERT_TRUE(kb.templates[2].pmi.has_value());
  EXPECT_NEAR(*kb.templates[2].pmi, 0.916291, 1e-9);

  const auto& drunk = kb.templates[6];
  EXPECT_EQ(drunk.property, "drunk");
  EXPECT_FALSE(drunk.polarity);

  // Serialization reproduces both files from the loaded structures.
  std::string base_text = serialize_knowledge_base(kb);
  std::string sidecar_text = serialize_kb_sidecar(kb);
  EXPECT_NE(base_text.find("jim.upset = true may cause execution of yell ["), std::string::npos);
  EXPECT_NE(sidecar_text.find("\"pmi\":\"1.386294\""), std::string::npos);
  EXPECT_NE(sidecar_text.find("\"pmi\":null"), std::string::npos);

  auto reloaded = load_knowledge_base(base_text, sidecar_text);
  EXPECT_EQ(reloaded.templates, kb.templates);
  EXPECT_EQ(serialize_knowledge_base(reloaded), base_text);
  EXPECT_EQ(serialize_kb_sidecar(reloaded), sidecar_text);
}

TEST(KbFiles, LoaderRejectsStructuralProblems) {
  EXPECT_THROW(load_knowledge_base("a.b = true may cause execution of c [x, y]\n"), ParseError);
  std::string base =
      "a.b = true may cause execution of c [x, y]\n"
      "a_subject.b = true may cause execution of c [y_object, x_subject]\n";
  EXPECT_NO_THROW(load_knowledge_base(base));
  EXPECT_THROW(load_knowledge_base(base, "{\"id\":\"t1\",\"support\":1,\"pmi\":null}\n{}\n"),
               ParseError);  // sidecar length mismatch
  EXPECT_THROW(load_knowledge_base(base, "not json\n"), ParseError);

  // Without a sidecar, ids are positional and support defaults to one.
  auto kb = load_knowledge_base(base);
  EXPECT_EQ(kb.templates[0].id, "t000001");
  EXPECT_EQ(kb.templates[0].support, 1);
  EXPECT_FALSE(kb.templates[0].pmi.has_value());
}
