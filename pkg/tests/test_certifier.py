import numpy as np
import pytest

from conftest import brute_force_intersections, p1_gap, random_complex
from psl2trop.certifier import (
    EXCLUDED, BidegreeCurve, certify_no_lines, cross_check, curve_intersections,
    genericity_report, low_degree_families, p1_distance, ramification_points, rigid_lines_d3,
    ruling_free, transversality, with_ruling_component, with_triple_point,
)
from psl2trop.cli import load_family
from psl2trop.errors import CommonFactorError, GenericityError
from psl2trop.lines import image_contains, sample_image
from psl2trop.surfaces import ODD, Poly4, random_family, restrict_to_quadric, stratum_membership


def curve(degree, rng):
    return restrict_to_quadric(Poly4.random(degree, rng))


def test_curve_intersections_meet_bezout(rng):
    for d1 in range(1, 5):
        for d2 in range(1, 5):
            g1, g2 = curve(d1, rng), curve(d2, rng)
            I = curve_intersections(g1, g2, rng)
            assert I.total == 2 * d1 * d2 == len(I.points)
            for p in I.points:
                assert g1.residual(p.x, p.y) <= 1e-9 and g2.residual(p.x, p.y) <= 1e-9
                assert transversality(g1, g2, p.x, p.y) > 0


def test_curve_intersections_match_newton_oracle(rng):
    for d1, d2 in [(1, 3), (2, 2), (3, 4), (4, 4)]:
        g1, g2 = curve(d1, rng), curve(d2, rng)
        I = curve_intersections(g1, g2, rng)
        oracle = brute_force_intersections(g1, g2, rng)
        assert len(oracle) == I.total
        for x, y in oracle:
            assert min(max(p1_gap(x, p.x / np.linalg.norm(p.x)), p1_gap(y, p.y / np.linalg.norm(p.y)))
                       for p in I.points) <= 1e-7


def test_d3_example_has_six_intersection_points():
    S = load_family("d3")
    I = curve_intersections(S.curves[1], S.curves[0])
    assert I.total == 6


def test_curves_with_a_common_component_are_rejected(rng):
    h = Poly4.from_terms([((1, 0, 0, 0), 1.0), ((0, 1, 0, 0), 2.0)])
    g1 = restrict_to_quadric(h * Poly4.random(1, rng))
    g2 = restrict_to_quadric(h * Poly4.random(2, rng))
    with pytest.raises(CommonFactorError):
        curve_intersections(g1, g2, rng)


def test_ruling_free_examples(rng):
    # a = x0 y0 is a union of two ruling lines
    assert not ruling_free(restrict_to_quadric(Poly4.from_terms([((1, 0, 0, 0), 1)])))
    trace = Poly4.from_terms([((1, 0, 0, 0), 1), ((0, 0, 0, 1), 1)])
    assert ruling_free(restrict_to_quadric(trace))
    for d in (2, 3, 4):
        assert ruling_free(curve(d, rng))
    assert ruling_free(BidegreeCurve(np.array([[2.0]])))
    a = Poly4.from_terms([((1, 0, 0, 0), 1)])
    assert not ruling_free(restrict_to_quadric(a * Poly4.random(2, rng)))


def test_ramification_count(rng):
    for d in (2, 3):
        pts = ramification_points(curve(d, rng), rng)
        assert len(pts) == 2 * d * (d - 1)
    assert ramification_points(curve(1, rng), rng) == []


def test_genericity_on_bundled_d4():
    report = genericity_report(load_family("d4"))
    assert report.passed and report.failures() == []
    assert report.to_json()["passed"] is True


def test_engineered_ruling_component_is_refused(rng):
    S = with_ruling_component(load_family("d4"), rng)
    with pytest.raises(GenericityError) as exc:
        certify_no_lines(S, rng)
    assert "curves_contain_no_ruling" in exc.value.report.failures()


def test_engineered_triple_point_is_refused(rng):
    S = with_triple_point(load_family("d5"), rng)
    with pytest.raises(GenericityError) as exc:
        certify_no_lines(S, rng)
    assert "triple_empty" in exc.value.report.failures()
    with pytest.raises(ValueError):
        with_triple_point(load_family("d4"), rng)


def test_rigid_lines_d3_gives_twelve_candidates():
    S = load_family("d3")
    I, cands = rigid_lines_d3(S)
    assert I.total == 6 and len(cands) == 12
    assert {c.line.bidegree for c in cands} == {(1, 0), (0, 1)}
    with pytest.raises(ValueError):
        rigid_lines_d3(load_family("d4"))


@pytest.mark.parametrize("name", ["d1", "d2"])
def test_low_degree_line_images_lie_in_the_surface_image(name):
    S = load_family(name)
    fam = low_degree_families(S)
    assert fam.degree == S.degree and len(fam.components) == 2
    rng = np.random.default_rng(8)
    for _ in range(10):
        img = fam.sample(rng)
        for x in sample_image(img, rng, 10):
            assert image_contains(img, x).ok
            assert stratum_membership(S, x).member, (img.shape, x)


def test_low_degree_families_reject_other_degrees():
    with pytest.raises(ValueError):
        low_degree_families(load_family("d3"))


@pytest.mark.parametrize("name", ["d4", "d5"])
def test_bundled_certificates_are_valid(name):
    S = load_family(name)
    rng = np.random.default_rng(9)
    cert = certify_no_lines(S, rng)
    assert cert.valid and cert.triple_intersection_empty
    assert cert.candidates and all(c.verdict == EXCLUDED for c in cert.candidates)
    for cand in cert.candidates:
        assert cross_check(S, cand, rng, samples=10)
    data = cert.to_json()
    assert data["valid"] and len(data["candidates"]) == len(cert.candidates)


def test_random_d4_certificate(rng):
    S = random_family("even", 2, rng)
    cert = certify_no_lines(S, rng)
    assert cert.valid
    assert cert.intersection_points.total == 16


def test_certificate_needs_degree_four(rng):
    with pytest.raises(ValueError):
        certify_no_lines(random_family(ODD, 1, rng), rng)


def test_p1_distance_is_projective(rng):
    u = random_complex(rng, 2)
    assert p1_distance(u, (2 - 3j) * u) < 1e-12
    assert p1_distance([1, 0], [0, 1]) > 1
    assert p1_distance([1, 0], [1, 1e-6]) == pytest.approx(1e-6, rel=1e-3)
