"""
Input bindings - concrete values for a program's parameters.

File format (JSON):
    {"params": {"x": [[1.0, 0.0], [2.0, 0.5]], "Mu": [0.0, 0.0],
                "Sigma": [[1.0, 0.0], [0.0, 1.0]], "flag": true}}

Scalars are JSON numbers or booleans, arrays are nested lists (rectangular).
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np

from psp.errors import BindingError
from psp.frontend.syntax import ProgramAst, TypeSpec
from psp.ops import ValueType

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParamShape:
    """Type and concrete shape of one bound parameter (shape None for scalars)"""
    type: ValueType
    shape: Optional[Tuple[int, ...]] = None

    @property
    def is_array(self) -> bool:
        return self.shape is not None


BindingSchema = Mapping[str, ParamShape]


@dataclass
class InputBinding:
    """Parameter name -> value (Python scalar or numpy array)"""
    values: Dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, name: str) -> Any:
        return self.values[name]

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def names(self):
        return sorted(self.values)

    def schema(self) -> Dict[str, ParamShape]:
        """Shapes as seen from the values alone (numbers are typed REAL)"""
        result = {}
        for name, value in self.values.items():
            if isinstance(value, np.ndarray):
                base = ValueType.BOOL if value.dtype == np.bool_ else ValueType.REAL
                result[name] = ParamShape(base, tuple(int(d) for d in value.shape))
            elif isinstance(value, (bool, np.bool_)):
                result[name] = ParamShape(ValueType.BOOL)
            else:
                result[name] = ParamShape(ValueType.REAL)
        return result

    def to_dict(self) -> Dict[str, Any]:
        params = {}
        for name in self.names():
            value = self.values[name]
            params[name] = value.tolist() if isinstance(value, np.ndarray) else value
        return {'params': params}


def binding_from_dict(data: Mapping[str, Any]) -> InputBinding:
    """
    Build a binding from the JSON document shape.

    Accepts either {"params": {...}} or a bare {...} parameter mapping.
    """
    if not isinstance(data, Mapping):
        raise BindingError("binding must be a JSON object")
    params = data['params'] if 'params' in data else data
    if not isinstance(params, Mapping):
        raise BindingError("'params' must be a JSON object")
    values: Dict[str, Any] = {}
    for name, raw in params.items():
        values[str(name)] = _convert_value(str(name), raw)
    return InputBinding(values)


def load_binding(path: Union[str, Path]) -> InputBinding:
    """
    Read a binding file.

    Raises:
        OSError: file missing or unreadable
        BindingError: malformed JSON or values
    """
    path = Path(path)
    with open(path, 'r', encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise BindingError(f"invalid JSON in {path}: {e}")
    binding = binding_from_dict(data)
    logger.debug(f"Loaded binding {path} ({len(binding.values)} params)")
    return binding


def _convert_value(name: str, raw: Any) -> Any:
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, (int, float)):
        return raw
    if isinstance(raw, list):
        try:
            array = np.asarray(raw)
        except ValueError as e:
            raise BindingError(f"parameter '{name}': arrays must be rectangular ({e})")
        if array.dtype == np.bool_:
            return array
        if array.dtype == object or array.size and not np.issubdtype(array.dtype, np.number):
            raise BindingError(f"parameter '{name}': array entries must all be numbers or all booleans")
        return array.astype(np.float64)
    raise BindingError(f"parameter '{name}': unsupported value {raw!r}")


def check_binding(program: ProgramAst, binding: InputBinding) -> Dict[str, ParamShape]:
    """
    Check a binding against the program's parameter declarations.

    Every parameter must be bound exactly once, with the declared type and
    rank; literal dimensions must match. Returns the resulting schema with
    declared base types.

    Raises:
        BindingError: on missing, extra or mis-shaped parameters
    """
    declared = {p.name: p for p in program.params}
    missing = sorted(set(declared) - set(binding.values))
    extra = sorted(set(binding.values) - set(declared))
    if missing:
        raise BindingError(f"unbound parameter(s): {', '.join(missing)}")
    if extra:
        raise BindingError(f"binding has parameter(s) the program does not declare: {', '.join(extra)}")

    schema: Dict[str, ParamShape] = {}
    for name, param in declared.items():
        schema[name] = _check_value(name, param.type, binding.values[name], param.loc)
    return schema


def _check_value(name: str, decl: TypeSpec, value: Any, loc) -> ParamShape:
    if decl.is_array:
        if not isinstance(value, np.ndarray):
            raise BindingError(f"parameter '{name}' is declared as an array but bound to {value!r}", loc)
        if value.ndim != decl.rank:
            raise BindingError(f"parameter '{name}' has rank {decl.rank} but value has rank {value.ndim}", loc)
        for axis, (want, got) in enumerate(zip(decl.dims, value.shape)):
            if want is not None and want != got:
                raise BindingError(
                    f"parameter '{name}' dimension {axis} is declared {want} but bound to {got}", loc
                )
        is_bool = value.dtype == np.bool_
        if (decl.base is ValueType.BOOL) != is_bool and value.size:
            raise BindingError(f"parameter '{name}' element type does not match its declaration", loc)
        return ParamShape(decl.base, tuple(int(d) for d in value.shape))

    if isinstance(value, np.ndarray):
        raise BindingError(f"parameter '{name}' is declared scalar but bound to an array", loc)
    if decl.base is ValueType.BOOL:
        if not isinstance(value, (bool, np.bool_)):
            raise BindingError(f"parameter '{name}' is declared bool but bound to {value!r}", loc)
    else:
        if isinstance(value, (bool, np.bool_)):
            raise BindingError(f"parameter '{name}' is declared numeric but bound to a boolean", loc)
        if decl.base is ValueType.INT and float(value) != int(value):
            raise BindingError(f"parameter '{name}' is declared int but bound to {value!r}", loc)
    return ParamShape(decl.base)
