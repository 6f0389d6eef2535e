"""
Pytest tests for projection systems, modified distances and ordered intervals.
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from quasitree.errors import BarrierNotFoundError, DegenerateConfigurationError, OrderInconsistencyError
from quasitree.hyperbolic_plane import random_geodesic_instance, schottky_instance
from quasitree.instances import chain_instance
from quasitree.projection_complex import build_complex
from quasitree.projection_core import (
    CoreParams,
    IntervalSystem,
    ProjectionSystem,
    TabularSystem,
    auto_calibrate_k,
    axiom_entries,
    barrier_consequence_holds,
    check_guard_remark,
    check_theorem_main,
    find_barrier,
    h_set,
    is_barrier,
    is_guard,
    large_set,
    modified_distance,
    order_interval,
    sort_by_projection_order,
    validate_axioms,
)


@pytest.fixture
def chain():
    """Six lines in a row; consecutive vertices see each other 25 apart."""
    return chain_instance(6)


@pytest.fixture
def chain_params():
    """Constants with K = 10 for the chain."""
    return CoreParams(xi=1.0, k=10.0)


@pytest.fixture
def tie_system():
    """Two vertices with large projections for (X, Z) that cannot be ordered."""
    return TabularSystem(["X", "Z", "Y", "W"], 1.0, {("Y", "X", "Z"): 50.0, ("W", "X", "Z"): 50.0})


@pytest.fixture
def raw_counterexample():
    """A valid table whose raw distances break monotonicity while the modified ones do not."""
    return TabularSystem(
        ["X", "Y", "Z", "W"],
        4.0,
        {
            ("Y", "X", "Z"): 20.0,
            ("Y", "X", "W"): 20.0,
            ("W", "X", "Z"): 3.0,
            ("W", "Z", "Y"): 3.5,
            ("W", "X", "Y"): 0.5,
        },
    )


@pytest.mark.unit
class TestCoreParams:
    """Tests for the constant ledger."""

    def test_defaults_follow_xi(self):
        """Test that unset constants are derived from xi."""
        params = CoreParams(xi=1.0)
        assert params.theta == 4.0
        assert params.k == 30.0
        assert params.k_prime == 180.0
        assert params.bridge_length == 33.0

    def test_with_k_rederives(self):
        """Test that K' and L follow a new K."""
        params = CoreParams(xi=1.0).with_k(10.0)
        assert (params.k, params.k_prime, params.bridge_length) == (10.0, 80.0, 13.0)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"theta": 3.0},
            {"k": 2.0},
            {"k": 10.0, "k_prime": 10.0},
            {"k": 10.0, "bridge_length": 12.0},
        ],
    )
    def test_rejects_misordered_constants(self, overrides):
        """Test the ordering theta >= 4 xi, K >= theta, K' > K and L > K + 2 xi."""
        with pytest.raises(ValidationError):
            CoreParams(xi=1.0, **overrides)

    def test_xi_must_be_positive(self):
        """Test that xi = 0 is rejected."""
        with pytest.raises(ValidationError):
            CoreParams(xi=0.0)


@pytest.mark.unit
class TestSystems:
    """Tests for constructing projection systems."""

    def test_undefined_entries_are_nan(self, chain):
        """Test that d_Y(Y, Z) and d_Y(X, Y) are masked."""
        assert np.isnan(chain.dpi_table[1, 1, 3])
        assert np.isnan(chain.dpi_table[1, 3, 1])
        assert chain.dpi("V1", "V0", "V2") == 25.0

    def test_dpi_to_self_raises(self, chain):
        """Test that projecting onto an endpoint is undefined."""
        with pytest.raises(ValueError):
            chain.dpi("V1", "V1", "V2")

    def test_duplicate_ids_are_degenerate(self):
        """Test that vertex ids must be unique."""
        with pytest.raises(DegenerateConfigurationError):
            ProjectionSystem(["A", "A"], np.zeros((2, 2, 2)), 1.0)

    def test_tabular_completion_is_symmetric(self):
        """Test that (Z, X) is filled in from (X, Z)."""
        system = TabularSystem(["A", "B", "C"], 1.0, {("C", "A", "B"): 0.5})
        assert system.dpi("C", "B", "A") == 0.5

    def test_tabular_conflict_raises(self):
        """Test that contradicting swapped entries are rejected."""
        with pytest.raises(ValueError, match="Conflicting"):
            TabularSystem(["A", "B", "C"], 1.0, {("C", "A", "B"): 0.5, ("C", "B", "A"): 0.7})

    def test_interval_system_measures_xi(self):
        """Test that xi is measured with a safety margin when omitted."""
        intervals = np.zeros((3, 3, 2))
        intervals[0, 1] = (0.0, 0.5)
        system = IntervalSystem(["A", "B", "C"], intervals)
        assert system.xi > 0.5
        assert system.nu == 0.5
        assert system.interval("A", "B") == (0.0, 0.5)

    def test_with_xi_drops_cached_table(self, chain):
        """Test that a new xi gives a fresh modified table."""
        _ = chain.modified_table
        clone = chain.with_xi(2.0)
        assert clone.xi == 2.0
        assert chain.xi == 1.0
        assert "modified_table" not in clone.__dict__


@pytest.mark.unit
class TestAxioms:
    """Tests for axiom validation."""

    def test_chain_is_valid(self, chain):
        """Test that the chain satisfies every axiom."""
        report = validate_axioms(chain)
        assert report["ok"]
        assert report["max_projection_diameter"] == 0.0
        assert report["minimal_valid_xi"] < 1.0

    def test_behrstock_violation(self):
        """Test that two large mutual projections are reported."""
        system = TabularSystem(["X", "Y", "Z"], 1.0, {("Y", "X", "Z"): 5.0, ("X", "Y", "Z"): 5.0})
        report = validate_axioms(system)
        assert not report["ok"]
        assert report["violation_counts"]["behrstock"] > 0
        assert report["minimal_valid_xi"] > 5.0
        assert all(violation["axiom"] == "behrstock" for violation in report["violations"])

    def test_entries(self, chain):
        """Test the suite entries built from a report."""
        entries = axiom_entries(validate_axioms(chain))
        assert set(entries) == {
            "symmetry",
            "triangle",
            "behrstock",
            "bounded_projection",
            "finiteness",
            "minimal_valid_xi",
        }
        assert entries["behrstock"]["status"] == "pass"
        assert entries["minimal_valid_xi"]["status"] == "info"


@pytest.mark.unit
class TestModifiedDistance:
    """Tests for H(X, Z) and the modified distance."""

    def test_h_set_without_large_pairs(self):
        """Test that H(X, Z) is just (X, Z) when nothing projects far onto X or Z."""
        system = TabularSystem(["A", "B", "C", "D"], 1.0, {("C", "A", "B"): 10.0, ("C", "A", "D"): 10.0})
        assert h_set(system, "A", "B").members == frozenset({("A", "B")})
        assert modified_distance(system, "C", "A", "B") == 10.0

    def test_h_set_takes_minimum(self):
        """Test that a pair far on B enters H(A, B) and lowers d_C."""
        system = TabularSystem(
            ["A", "B", "C", "D"],
            1.0,
            {("C", "A", "B"): 10.0, ("C", "A", "D"): 7.0, ("B", "A", "D"): 10.0},
        )
        members = h_set(system, "A", "B")
        assert ("A", "D") in members
        assert len(members) == 2
        assert members.swapped().pair == ("B", "A")
        assert modified_distance(system, "C", "A", "B") == 7.0

    def test_modified_distance_rejects_equal_pair(self, chain):
        """Test that d_Y(X, X) is undefined."""
        with pytest.raises(ValueError):
            modified_distance(chain, "V1", "V0", "V0")

    def test_large_set(self, chain, chain_params):
        """Test that large projections of the chain sit strictly between the endpoints."""
        assert large_set(chain, chain_params, "V0", "V4", 10.0) == frozenset({"V1", "V2", "V3"})

    def test_large_set_threshold_below_theta(self, chain, chain_params):
        """Test that thresholds below theta are rejected."""
        with pytest.raises(ValueError):
            large_set(chain, chain_params, "V0", "V4", 1.0)


@pytest.mark.unit
class TestOrderedIntervals:
    """Tests for the order on large projection sets."""

    def test_chain_order(self, chain, chain_params):
        """Test that the order runs along the chain."""
        interval = order_interval(chain, chain_params, "V0", "V4", 10.0)
        assert interval.elements == ("V0", "V1", "V2", "V3", "V4")
        assert interval.interior == ("V1", "V2", "V3")
        assert interval.position("V2") == 2

    def test_swap_reverses(self, chain, chain_params):
        """Test that swapping X and Z reverses the order exactly."""
        forward = order_interval(chain, chain_params, "V0", "V5", 10.0)
        backward = order_interval(chain, chain_params, "V5", "V0", 10.0)
        assert backward.elements == tuple(reversed(forward.elements))

    def test_tie_raises(self, tie_system):
        """Test that an unorderable pair is an error carrying the triple."""
        with pytest.raises(OrderInconsistencyError) as raised:
            sort_by_projection_order(tie_system, "X", ["Y", "W"])
        assert raised.value.triple == ("X", "Y", "W")

    def test_auto_k_doubles_past_ties(self, tie_system):
        """Test that K doubles until the tied vertices leave Y_K."""
        params = auto_calibrate_k(tie_system, CoreParams(xi=1.0, k=10.0))
        assert params.k == 80.0

    def test_auto_k_budget(self, tie_system):
        """Test that an exhausted doubling budget raises."""
        with pytest.raises(OrderInconsistencyError):
            auto_calibrate_k(tie_system, CoreParams(xi=1.0, k=10.0), max_doublings=1)

    def test_auto_k_keeps_consistent_k(self, chain, chain_params):
        """Test that a consistent K is returned unchanged."""
        assert auto_calibrate_k(chain, chain_params).k == 10.0


@pytest.mark.unit
class TestGuardsAndBarriers:
    """Tests for guards and barriers on the chain."""

    @pytest.mark.parametrize(
        "w,y,expected",
        [
            ("V3", "V4", True),
            ("V1", "V0", True),
            ("V1", "V4", False),
        ],
    )
    def test_is_guard(self, chain, chain_params, w, y, expected):
        """Test guards next to and far from the guarded vertex."""
        assert is_guard(chain, chain_params, w, y, chain_params.k) is expected

    def test_guard_remark(self, chain, chain_params):
        """Test that extreme elements of Y_K/2 always guard."""
        entry = check_guard_remark(chain, chain_params)
        assert entry["status"] == "pass"
        assert entry["checked"] > 0

    def test_find_barrier(self, chain, chain_params):
        """Test that the vertex next to Z is the barrier for an initial path segment."""
        complex_ = build_complex(chain, chain_params)
        barrier = find_barrier(chain, chain_params, complex_, ["V0", "V1"], "V5")
        assert barrier == "V4"
        assert is_barrier(chain, chain_params, barrier, ["V0", "V1"], "V5")
        assert barrier_consequence_holds(chain, chain_params, ["V0", "V1"], "V5")

    def test_find_barrier_needs_distance(self, chain, chain_params):
        """Test that the path must stay three steps from Z."""
        complex_ = build_complex(chain, chain_params)
        with pytest.raises(ValueError):
            find_barrier(chain, chain_params, complex_, ["V3"], "V5")

    def test_is_barrier_rejects_target_on_path(self, chain, chain_params):
        """Test that Z may not lie on the path."""
        with pytest.raises(ValueError):
            is_barrier(chain, chain_params, "V2", ["V0", "V5"], "V5")

    def test_barrier_not_found_is_a_value_error(self):
        """Test that the K-too-small diagnostic is an input error."""
        assert issubclass(BarrierNotFoundError, ValueError)


@pytest.mark.unit
class TestTheoremMain:
    """Tests for the exhaustive modified-distance checks."""

    def test_chain_passes(self, chain, chain_params):
        """Test that the chain has no failed or flagged entries."""
        entries = check_theorem_main(chain, chain_params)
        assert {entry["status"] for entry in entries.values()} <= {"pass", "info"}
        assert entries["E"]["measured"] == 4.0

    def test_raw_monotonicity_is_informational(self, raw_counterexample):
        """Test that raw monotonicity fails while modified monotonicity holds."""
        assert validate_axioms(raw_counterexample)["ok"]
        entries = check_theorem_main(raw_counterexample, CoreParams(xi=4.0))
        assert entries["F-raw"]["violations"] > 0
        assert entries["F-raw"]["status"] == "info"
        assert entries["F"]["status"] == "pass"
        assert entries["B"]["measured"] == pytest.approx(0.5)

    def test_tie_is_flagged_not_failed(self, tie_system):
        """Test that an inconsistent order is a flag."""
        entries = check_theorem_main(tie_system, CoreParams(xi=1.0, k=10.0))
        assert entries["G-order"]["status"] == "flag"

    def test_betweenness_bound_on_chain(self, chain, chain_params):
        """Test that a vertex between Y0 and Y2 sees them exactly as far apart as X and Z."""
        entries = check_theorem_main(chain, chain_params)
        assert entries["G-bound"]["status"] == "pass"
        assert entries["G-bound"]["measured"] == 0.0
        assert entries["G-bound"]["checked"] == entries["G-between"]["checked"]

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(20))
    def test_random_geodesic_hard_clauses(self, seed):
        """Test the hard clauses on seeded instances of 30 random geodesics."""
        system = random_geodesic_instance(30, seed=seed)
        entries = check_theorem_main(system, CoreParams(xi=system.xi))
        for key in ("A", "B", "D", "F", "H"):
            assert entries[key]["status"] == "pass", key

    def test_schottky_hard_clauses(self):
        """Test the hard clauses on the radius-2 Schottky instance."""
        system = schottky_instance(word_radius=2)
        entries = check_theorem_main(system, CoreParams(xi=system.xi))
        for key in ("A", "B", "D", "F", "H"):
            assert entries[key]["status"] == "pass", key
        assert math.isfinite(entries["C"]["measured"])

    @pytest.mark.slow
    def test_schottky_radius_three(self):
        """Test the hard clauses on the radius-3 Schottky instance."""
        system = schottky_instance(word_radius=3)
        assert validate_axioms(system)["ok"]
        entries = check_theorem_main(system, CoreParams(xi=system.xi))
        for key in ("A", "B", "D", "F", "H"):
            assert entries[key]["status"] == "pass", key
