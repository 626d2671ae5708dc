import os
import yaml
from typing import Dict, Any, List
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()


class Config:
    def __init__(self, config_path: str = None):
        if config_path is None:
            config_path = os.path.join(os.path.dirname(__file__), '..', '..', 'config', 'settings.yaml')

        self.config_path = Path(config_path)
        self._config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        try:
            with open(self.config_path, 'r', encoding='utf-8') as file:
                return yaml.safe_load(file) or {}
        except FileNotFoundError:
            raise FileNotFoundError(f"Configuration file not found: {self.config_path}")
        except yaml.YAMLError as e:
            raise ValueError(f"Error parsing YAML configuration: {e}")

    def get(self, key: str, default: Any = None) -> Any:
        keys = key.split('.')
        value = self._config

        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default

        return value

    def index_set_preset(self, name: str) -> Dict[str, Any]:
        presets = self.get('presets.index_sets', {})
        if name not in presets:
            raise KeyError(f"Unknown index set preset '{name}'. Known presets: {', '.join(sorted(presets))}")
        return presets[name]

    @property
    def app_name(self) -> str:
        return self.get('app.name', 'GenPoly Lab')

    @property
    def debug(self) -> bool:
        return self.get('app.debug', False)

    @property
    def max_bits(self) -> int:
        override = os.getenv('GENPOLY_MAX_BITS')
        if override:
            try:
                return int(override)
            except ValueError:
                raise ValueError(f"GENPOLY_MAX_BITS must be an integer, got {override!r}")
        return int(self.get('numbers.max_bits', 4096))

    @property
    def initial_bits(self) -> int:
        return int(self.get('numbers.initial_bits', 64))

    @property
    def degree_bound(self) -> int:
        return int(self.get('algsem.degree_bound', 3))

    @property
    def degree_cap(self) -> int:
        return int(self.get('algsem.degree_cap', 12))

    @property
    def sandwich_tail_indices(self) -> List[int]:
        return [int(n) for n in self.get('algsem.sandwich.tail_indices', [1000, 2000, 5000, 10000])]

    @property
    def jobs(self) -> int:
        return int(self.get('orbitlab.jobs', 4))

    @property
    def log_level(self) -> str:
        return self.get('logging.level', 'INFO')

    @property
    def log_format(self) -> str:
        return self.get('logging.format', '%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    @property
    def log_file(self) -> str:
        return self.get('logging.file', 'logs/genpoly_lab.log')


config = Config()
