"""
Pytest tests for instance specs, built-ins and JSON loading.
"""

import json

import pytest
from pydantic import ValidationError

from quasitree.errors import DegenerateConfigurationError
from quasitree.hyperbolic_plane import GeodesicSystem
from quasitree.instances import (
    BUILTIN_NAMES,
    ChainSpec,
    HubSpec,
    RandomGeodesicSpec,
    SchottkySpec,
    TabularSpec,
    TangentChainSpec,
    builtin_spec,
    chain_instance,
    hub_instance,
    instance_hash,
    load_instance,
    load_spec,
    spec_from_file,
    with_overrides,
)
from quasitree.projection_core import IntervalSystem, TabularSystem


@pytest.fixture
def violation_spec():
    """Two vertices see each other far apart; the Behrstock inequality fails."""
    return TabularSpec(xi=1.0, vertices=["X", "Y", "Z"], dpi={"Y": {"X|Z": 5.0}, "X": {"Y|Z": 5.0}})


@pytest.mark.unit
class TestSpecs:
    """Tests for spec validation and serialization."""

    def test_defaults(self):
        """Test the default values of the built-in specs."""
        assert SchottkySpec().word_radius == 1
        assert RandomGeodesicSpec().count == 30
        assert TangentChainSpec().count == 8
        assert ChainSpec().step == 25.0
        assert HubSpec().xi == 1.5

    def test_specs_are_frozen(self):
        """Test that specs cannot be modified after construction."""
        spec = ChainSpec()
        with pytest.raises(ValidationError):
            spec.count = 9

    def test_unknown_fields_are_rejected(self):
        """Test that misspelt keys fail validation."""
        with pytest.raises(ValidationError):
            ChainSpec(cout=4)

    def test_generators_must_be_square(self):
        """Test that generators are 2x2 matrices."""
        with pytest.raises(ValidationError):
            SchottkySpec(generators=[[[1, 2, 3], [4, 5, 6]]])

    def test_tabular_rejects_unknown_vertex(self):
        """Test that entries must name listed vertices."""
        with pytest.raises(ValidationError):
            TabularSpec(xi=1.0, vertices=["A", "B"], dpi={"C": {"A|B": 1.0}})

    def test_tabular_rejects_malformed_key(self):
        """Test that pair keys have exactly two parts."""
        with pytest.raises(ValidationError):
            TabularSpec(xi=1.0, vertices=["A", "B", "C"], dpi={"C": {"A|B|C": 1.0}})

    def test_tabular_builds_symmetric_table(self, violation_spec):
        """Test that a tabular spec builds a completed table."""
        system = violation_spec.build()
        assert isinstance(system, TabularSystem)
        assert system.dpi("Y", "Z", "X") == 5.0

    def test_json_round_trip_to_file(self, tmp_path):
        """Test writing a spec and reading it back."""
        spec = ChainSpec(count=4, step=30.0)
        file_path = tmp_path / "nested" / "chain.json"
        content = spec.to_json(file_path)
        assert json.loads(content) == {"count": 4, "step": 30.0, "xi": 1.0}
        assert ChainSpec.from_json_file(file_path) == spec


@pytest.mark.unit
class TestBuiltins:
    """Tests for the built-in instances."""

    @pytest.mark.parametrize("name", BUILTIN_NAMES)
    def test_every_builtin_loads(self, name):
        """Test that each built-in name builds a system."""
        spec, system = load_instance(name, count=5)
        assert spec.kind in {"schottky", "chain", "hub", "tangent-chain", "random"}
        assert len(system) > 1

    def test_unknown_builtin(self):
        """Test that unknown names raise KeyError."""
        with pytest.raises(KeyError):
            builtin_spec("torus")

    def test_schottky_radius_and_xi(self):
        """Test that radius and xi reach the Schottky spec."""
        spec = builtin_spec("schottky-default", radius=2, xi=3.0)
        system = spec.build()
        assert isinstance(system, GeodesicSystem)
        assert len(system) == 18
        assert system.xi == 3.0

    def test_chain_instance_layout(self):
        """Test that earlier lines project to 0 and later lines to the step."""
        system = chain_instance(4, step=10.0)
        assert isinstance(system, IntervalSystem)
        assert system.interval("V2", "V0") == (0.0, 0.0)
        assert system.interval("V2", "V3") == (10.0, 10.0)
        assert system.dpi("V1", "V0", "V3") == 10.0

    def test_chain_needs_two_vertices(self):
        """Test that a one-vertex chain is degenerate."""
        with pytest.raises(DegenerateConfigurationError):
            chain_instance(1)

    def test_hub_instance(self):
        """Test the hub's middle lines."""
        system = hub_instance()
        assert system.vertices == ("V0", "V1", "V2", "V3", "V4")
        assert system.dpi("V2", "V0", "V4") == 12.5
        assert system.dpi("V0", "V1", "V4") == 0.0


@pytest.mark.unit
class TestLoading:
    """Tests for loading specs from files."""

    def test_detects_tabular(self, tmp_path, violation_spec):
        """Test that a dpi key means a tabular spec."""
        file_path = tmp_path / "table.json"
        violation_spec.to_json(file_path)
        assert spec_from_file(file_path) == violation_spec

    @pytest.mark.parametrize(
        "data,expected",
        [
            ({"word_radius": 2}, SchottkySpec),
            ({"min_gap": 0.3, "count": 4}, RandomGeodesicSpec),
            ({"gap": 0.1}, TangentChainSpec),
            ({"step": 5.0}, ChainSpec),
            ({"spread": 20.0}, HubSpec),
        ],
    )
    def test_detects_kind_by_keys(self, tmp_path, data, expected):
        """Test kind detection for each spec type."""
        file_path = tmp_path / "instance.json"
        file_path.write_text(json.dumps(data), encoding="utf-8")
        assert isinstance(spec_from_file(file_path), expected)

    def test_unrecognized_keys(self, tmp_path):
        """Test that a file with no recognizable key is degenerate."""
        file_path = tmp_path / "instance.json"
        file_path.write_text(json.dumps({"colour": "red"}), encoding="utf-8")
        with pytest.raises(DegenerateConfigurationError):
            spec_from_file(file_path)

    def test_non_object(self, tmp_path):
        """Test that a JSON list is rejected."""
        file_path = tmp_path / "instance.json"
        file_path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(DegenerateConfigurationError):
            spec_from_file(file_path)

    def test_missing_file(self, tmp_path):
        """Test that missing paths raise FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_instance(str(tmp_path / "absent.json"))

    def test_file_values_yield_to_overrides(self, tmp_path, violation_spec):
        """Test that xi and count given at load time replace the values in a file."""
        table_path = tmp_path / "table.json"
        violation_spec.to_json(table_path)
        assert load_spec(str(table_path), xi=10.0) == violation_spec.model_copy(update={"xi": 10.0})
        chain_path = tmp_path / "chain.json"
        ChainSpec(count=4).to_json(chain_path)
        assert load_spec(str(chain_path), count=7, xi=2.0) == ChainSpec(count=7, xi=2.0)

    def test_overrides_skip_missing_fields(self, violation_spec):
        """Test that None and fields the spec lacks leave it unchanged."""
        assert with_overrides(violation_spec, count=5, xi=None) is violation_spec
        assert with_overrides(HubSpec(), count=5) == HubSpec()

    def test_invalid_override_is_rejected(self, tmp_path):
        """Test that an override is validated like a file value."""
        chain_path = tmp_path / "chain.json"
        ChainSpec().to_json(chain_path)
        with pytest.raises(ValidationError):
            load_spec(str(chain_path), count=1)


@pytest.mark.unit
class TestInstanceHash:
    """Tests for the instance hash."""

    def test_hash_is_stable(self):
        """Test that equal specs hash equally."""
        assert instance_hash(ChainSpec()) == instance_hash(ChainSpec(count=6))
        assert len(instance_hash(ChainSpec())) == 64

    def test_hash_depends_on_kind_and_values(self):
        """Test that kind and parameters change the hash."""
        assert instance_hash(ChainSpec()) != instance_hash(ChainSpec(count=7))
        assert instance_hash(HubSpec(xi=1.0)) != instance_hash(ChainSpec(xi=1.0))

    def test_schottky_hash_leaves_out_the_seed(self):
        """Test that the unused Schottky seed is accepted but not hashed."""
        assert SchottkySpec(seed=1).seed == 1
        assert instance_hash(SchottkySpec(seed=1)) == instance_hash(SchottkySpec())
