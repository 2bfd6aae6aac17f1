#include <doctest.h>

#include "fixtures.hpp"
#include "medrep/description.hpp"
#include "medrep/error.hpp"
#include "medrep/rng.hpp"

using namespace medrep;

TEST_CASE("prompts follow the per-domain instructions") {
    const auto p = build_prompt(Domain::Condition, "Neutropenic fever");
    CHECK(p.rfind("Instruction: Briefly explain the clinical background and regarding treatments", 0) == 0);
    CHECK(p.size() >= 31);
    CHECK(p.substr(p.size() - 31) == "Concept name: Neutropenic fever");
    const auto drug = build_prompt(Domain::Drug, "Aspirin 100 MG Oral Tablet [Aspirin]");
    CHECK(drug.find("ingredient, dosage form, and strength") != std::string::npos);
    for (auto d : {Domain::Condition, Domain::Drug, Domain::Measurement, Domain::Procedure}) {
        const auto text = prompt_instruction(d);
        CHECK(!text.empty());
        CHECK(text.substr(text.size() - 14) == "Concept name: ");
    }
    CHECK_THROWS_AS(build_prompt(Domain::Special, "x"), Error);
}

TEST_CASE("stub embeddings") {
    const auto a = stub_embed("Neutropenic fever", "fever with low neutrophil count", 64, 5);
    CHECK(a == stub_embed("Neutropenic fever", "fever with low neutrophil count", 64, 5));
    CHECK(std::abs(a.norm() - 1.0) < 1e-9);
    CHECK(std::abs(stub_embed("", "", 16, 1).norm() - 1.0) < 1e-9);
    CHECK_THROWS_AS(stub_embed("x", "y", 0, 1), Error);

    // 9 of 10 tokens shared vs none shared.
    const std::string base = "alpha beta gamma delta epsilon zeta eta theta iota kappa";
    const auto x = stub_embed("c", base, 256, 3);
    const auto y = stub_embed("c", "alpha beta gamma delta epsilon zeta eta theta iota lambda", 256, 3);
    const auto z = stub_embed("d", "one two three four five six seven eight nine ten", 256, 3);
    CHECK(x.dot(y) > x.dot(z));
}

TEST_CASE("embedding matrix container") {
    fixture::TempDir dir("emb");
    const auto cat = fixture::golden_catalog();

    SUBCASE("specials-only zero matrix") {
        RepresentationMatrix r{Matrix::Zero(4, 8), RepresentationKind::Text};
        save_embedding_matrix(dir / "z.mrep", r);
        const auto back = load_embedding_matrix(dir / "z.mrep", ConceptCatalog{}, 8);
        CHECK(back.values.rows() == 4);
        CHECK(back.values.isZero(0));
    }
    SUBCASE("round trip is bit-identical") {
        Rng rng(4);
        RepresentationMatrix r{Matrix(static_cast<Eigen::Index>(cat.size()), 6), RepresentationKind::Graph};
        for (Eigen::Index i = 0; i < r.values.size(); ++i) r.values.data()[i] = standard_normal(rng);
        save_embedding_matrix(dir / "r.mrep", r, EmbeddingDType::F64, {{"seed", 4}});
        const auto stored = read_embedding_file(dir / "r.mrep");
        CHECK(stored.matrix.values == r.values);
        CHECK(stored.matrix.kind == RepresentationKind::Graph);
        CHECK(stored.provenance["seed"] == 4);
        CHECK(stored.provenance["kind"] == "graph");
    }
    SUBCASE("row mismatch is a shape error") {
        RepresentationMatrix r{Matrix::Zero(static_cast<Eigen::Index>(cat.size()) - 1, 4), RepresentationKind::Text};
        save_embedding_matrix(dir / "short.mrep", r);
        try {
            load_embedding_matrix(dir / "short.mrep", cat);
            FAIL("expected ShapeError");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ShapeError);
        }
    }
    SUBCASE("bad magic") {
        io::write_file(dir / "bad.mrep", "XXXX0000000000000000");
        try {
            read_embedding_file(dir / "bad.mrep");
            FAIL("expected ArtifactError");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ArtifactError);
        }
    }
}

TEST_CASE("text representations") {
    const auto cat = fixture::golden_catalog();
    std::vector<DescriptionRecord> desc{{100, std::nullopt, "fever in neutropenia"}};
    EmbeddingSource src;
    src.h = 16;
    src.seed = 2;
    const auto r = text_representations(cat, desc, src);
    CHECK(r.kind == RepresentationKind::Text);
    CHECK(r.rows() == static_cast<Eigen::Index>(cat.size()));
    CHECK(r.values.row(special::kPad).isZero(0));
    CHECK(std::abs(r.values.row(special::kCls).norm() - 1.0) < 1e-9);
    CHECK(r.values.row(4).transpose() == stub_embed("Neutropenic fever", "fever in neutropenia", 16, 2));
}

TEST_CASE("description files") {
    const auto recs = parse_descriptions("concept_id\tdescription\n100\tA fever.\n7_3\tHigh\\tsodium\n");
    REQUIRE(recs.size() == 2);
    CHECK(recs[1].decile == 3);
    CHECK(recs[1].description == "High\tsodium");
    CHECK(parse_descriptions(format_descriptions(recs))[1].description == "High\tsodium");
    CHECK_THROWS_AS(parse_descriptions("concept_id\tdescription\n100\t\n"), Error);
}
