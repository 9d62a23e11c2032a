#include "doctest.h"

#include "eftc/dataio.hpp"
#include "eftc/enrich.hpp"
#include "eftc/model.hpp"

using namespace eftc;

TEST_CASE("archive dataset end to end") {
  const auto m = known_dataset("ItalyPowerDemand", EFTC_TEST_DATA_DIR);
  REQUIRE(m.has_value());
  const CurveSet train = load_ucr(m->train_path);
  const LabelEncoder enc = encoder_of(train);
  const CurveSet test = load_ucr(m->test_path, Delimiter::Auto, &enc);
  REQUIRE(validate_manifest(*m, train, test).empty());

  const CurveFitter fitter = make_enrichment_fitter(train.time_grid);
  for (bool enriched : {false, true}) {
    EnrichmentOptions opt;
    if (!enriched) opt.blocks = {Block::Orig};
    const EnrichedMatrix tr = build_enriched(train, opt, &fitter);
    const EnrichedMatrix te = build_enriched(test, opt, &fitter);
    CHECK(tr.features.cols() == (enriched ? 6 : 1) * 26);
    CHECK(te.features.allFinite());
    const Classifier f = train_classifier(Method::Forest, {{"n_trees", 200}}, tr.features, tr.labels, 2, 1);
    // two balanced classes; published forests reach well above 0.9 here
    CHECK(evaluate(f, te.features, te.labels) > 0.85);
  }
}
