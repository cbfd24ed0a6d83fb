"""
Settings Manager
Persistent per-user preferences of the scsl tool
"""
import json
from pathlib import Path
from typing import Any, Dict, Optional

from utils.logger import setup_logger
import config

logger = setup_logger(__name__)


class SettingsManager:
    """
    Preferences kept in a small JSON file between invocations.

    Keys:
    - store_root: where run artifacts are written
    - default_seed / tick_ms: system test defaults picked up by the CLI
    - last_spec: the specification most recently checked
    """

    DEFAULTS: Dict[str, Any] = {
        'store_root': config.DEFAULT_STORE_ROOT,
        'default_seed': 0,
        'tick_ms': config.DEFAULT_TICK_MS,
        'last_spec': '',
        'version': '1.0',
    }

    def __init__(self, settings_path: Optional[str] = None):
        self.path = Path(settings_path or config.SETTINGS_FILE)
        self.settings: Dict[str, Any] = dict(self.DEFAULTS)
        if self.path.is_file():
            self._read()
        else:
            logger.info(f"No settings at {self.path}, writing defaults")
            self._write()

    def _read(self):
        try:
            stored = json.loads(self.path.read_text(encoding='utf-8'))
        except (OSError, ValueError) as e:
            logger.error(f"Unreadable settings file {self.path}: {e}")
            return
        if isinstance(stored, dict):
            self.settings.update(stored)
        logger.debug(f"Settings loaded from {self.path}")

    def _write(self):
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(json.dumps(self.settings, indent=2, ensure_ascii=False), encoding='utf-8')
        except OSError as e:
            logger.error(f"Could not save settings to {self.path}: {e}")

    def get_store_root(self) -> str:
        """Artifact store root, created on demand; falls back to the default root"""
        for root in (self.settings.get('store_root'), self.DEFAULTS['store_root']):
            if not root:
                continue
            try:
                Path(root).mkdir(parents=True, exist_ok=True)
                return str(root)
            except OSError as e:
                logger.warning(f"Store root {root} unusable: {e}")
        return str(self.DEFAULTS['store_root'])

    def get_default_seed(self) -> int:
        return int(self.settings.get('default_seed', self.DEFAULTS['default_seed']))

    def get_tick_ms(self) -> int:
        return int(self.settings.get('tick_ms', self.DEFAULTS['tick_ms']))

    def set_last_spec(self, path: str):
        self.settings['last_spec'] = path
        self._write()
