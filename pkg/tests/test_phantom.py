import numpy as np
import pytest

from modradon.errors import DomainError, ParseError
from modradon.phantom import (
    Ellipse,
    ImageGrid,
    Phantom,
    load_phantom,
    radon_ellipse,
    radon_phantom,
    rasterize,
    save_phantom,
    shepp_logan,
    walnut_standin,
)
from oracles import line_integral_oracle

UNIT_DISK = Ellipse((0.0, 0.0), (1.0, 1.0), 0.0, 1.0)


def random_ellipse(rng):
    a, b = rng.uniform(0.05, 0.45, size=2)
    r_max = 1.0 - max(a, b)
    r = rng.uniform(0.0, r_max * 0.95)
    ang = rng.uniform(0.0, 2 * np.pi)
    return Ellipse(
        (r * np.cos(ang), r * np.sin(ang)),
        (a, b),
        rng.uniform(0.0, np.pi),
        rng.uniform(-2.0, 2.0),
    )


class TestRadonEllipse:
    def test_unit_disk_diameter(self):
        for theta in (0.0, 0.7, np.pi / 2, 2.1):
            assert radon_ellipse(UNIT_DISK, theta, 0.0) == pytest.approx(2.0, abs=1e-14)

    def test_unit_disk_chord(self):
        assert radon_ellipse(UNIT_DISK, 0.0, 0.6) == pytest.approx(1.6, abs=1e-14)

    def test_miss_is_zero(self):
        assert radon_ellipse(UNIT_DISK, 0.3, 1.01) == 0.0

    def test_rotated_anisotropic_against_oracle(self):
        e = Ellipse((0.15, -0.2), (0.5, 0.2), 0.6, 1.3)
        got = radon_ellipse(e, np.pi / 3, 0.2)
        want = line_integral_oracle(e, np.pi / 3, 0.2)
        assert got == pytest.approx(want, abs=1e-8)

    def test_oracle_agreement_random(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            e = random_ellipse(rng)
            theta = rng.uniform(0.0, 2 * np.pi)
            t = rng.uniform(-1.2, 1.2)
            assert radon_ellipse(e, theta, t) == pytest.approx(
                line_integral_oracle(e, theta, t), abs=1e-8
            )


class TestRadonPhantom:
    def test_empty_phantom(self):
        p = Phantom(())
        assert radon_phantom(p, 0.3, 0.1) == 0.0
        np.testing.assert_array_equal(radon_phantom(p, 0.3, np.linspace(-1, 1, 5)), np.zeros(5))

    def test_single_ellipse_matches(self):
        e = Ellipse((0.1, 0.2), (0.3, 0.5), 0.4, 0.8)
        p = Phantom((e,))
        t = np.linspace(-1, 1, 31)
        np.testing.assert_array_equal(radon_phantom(p, 0.9, t), radon_ellipse(e, 0.9, t))

    def test_evenness(self):
        # exact up to the one rounding step in representing theta + pi
        p = shepp_logan()
        rng = np.random.default_rng(5)
        for _ in range(50):
            theta = rng.uniform(0.0, 2 * np.pi)
            t = rng.uniform(-1.1, 1.1)
            a = radon_phantom(p, theta + np.pi, -t)
            b = radon_phantom(p, theta, t)
            assert a == pytest.approx(b, rel=1e-12, abs=1e-12)

    def test_tangent_line_misses_mass(self):
        assert radon_phantom(shepp_logan(), 0.0, 1.0) == 0.0

    def test_vanishes_outside_unit_interval(self):
        p = shepp_logan()
        t = np.array([-1.7, -1.0001, 1.0001, 2.3])
        np.testing.assert_array_equal(radon_phantom(p, 1.1, t), np.zeros(4))

    def test_mass_is_angle_independent(self):
        p = shepp_logan()
        T = 1e-3
        t = np.arange(-1.0, 1.0 + T, T)
        masses = [T * np.sum(radon_phantom(p, th, t)) for th in (0.0, 0.5, 1.3, 2.6)]
        analytic = sum(
            e.intensity * np.pi * e.semi_axes[0] * e.semi_axes[1] for e in p.ellipses
        )
        for m in masses:
            assert m == pytest.approx(analytic, abs=1e-3)
            assert m == pytest.approx(masses[0], abs=1e-3)


class TestPhantoms:
    def test_shepp_logan_has_ten_ellipses(self):
        assert len(shepp_logan().ellipses) == 10

    def test_walnut_standin_valid(self):
        p = walnut_standin()
        assert len(p.ellipses) >= 5

    def test_containment_enforced(self):
        with pytest.raises(DomainError):
            Ellipse((0.8, 0.0), (0.5, 0.1), 0.0, 1.0)
        with pytest.raises(DomainError):
            Ellipse((0.0, 0.0), (0.0, 0.1), 0.0, 1.0)


class TestRasterize:
    def test_empty_phantom_zero_image(self):
        img = rasterize(Phantom(()), ImageGrid(16, 16))
        np.testing.assert_array_equal(img.pixels, np.zeros((16, 16)))

    def test_unit_disk_center_and_corner(self):
        img = rasterize(Phantom((UNIT_DISK,)), ImageGrid(64, 64))
        assert img.pixels[32, 32] == 1.0
        assert img.pixels[0, 0] == 0.0

    def test_shepp_logan_range(self):
        img = rasterize(shepp_logan(), ImageGrid(256, 256))
        assert img.pixels.max() == pytest.approx(1.0, abs=1e-12)
        assert img.pixels.min() >= -1e-15  # intensity sums cancel to ~0 in float
        # everything lives inside the unit disk
        X, Y = img.pixel_centers()
        outside = X**2 + Y**2 > 1.0
        assert np.all(img.pixels[outside] == 0.0)

    def test_additive_overlap(self):
        inner = Ellipse((0.0, 0.0), (0.2, 0.2), 0.0, 0.5)
        img = rasterize(Phantom((UNIT_DISK, inner)), ImageGrid(32, 32))
        assert img.pixels[16, 16] == pytest.approx(1.5)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        p = shepp_logan()
        path = tmp_path / "sl.txt"
        save_phantom(p, path)
        q = load_phantom(path)
        assert len(q.ellipses) == len(p.ellipses)
        for e1, e2 in zip(p.ellipses, q.ellipses):
            assert e1.center == e2.center
            assert e1.semi_axes == e2.semi_axes
            assert e1.rotation == pytest.approx(e2.rotation, abs=1e-15)
            assert e1.intensity == e2.intensity

    def test_bad_column_count(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0 0 0.5 0.5 0\n")
        with pytest.raises(ParseError, match="6 columns"):
            load_phantom(path)

    def test_non_numeric(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0 0 0.5 x 0 1\n")
        with pytest.raises(ParseError, match="line 1"):
            load_phantom(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("# just a comment\n")
        with pytest.raises(ParseError, match="no ellipses"):
            load_phantom(path)
