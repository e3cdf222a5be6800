"""
config.py
----------------
Config file loader class
Copyright (C) 2026 operasim contributors

Licensed under the GNU GENERAL PUBLIC LICENSE, Version 3 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    https://www.gnu.org/licenses/gpl-3.0.html

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
"""

import os
import logging
import yaml
import yamale
from yamale import YamaleError
from platformdirs import PlatformDirs


class ConfigError(ValueError):
    pass


class Config:
    """
    Config class validates and reads the optional operasim YAML configuration file and reports
    to the rest of the application the data as a dictionary, with every default filled in.
    """

    CONFIG_FILE_NAME = "operasim.yaml"
    CONFIG_SCHEMA_FILE_NAME = "operasim.schema.yaml"

    DEFAULT_LOG_LEVEL = "WARNING"
    DEFAULT_RUN = {
        "steps": 10,
        "seed": 0,
        "mode": "max",
        "bonds": "auto",
        "format": "text",
        "death_releases_objects": False,
    }
    DEFAULT_MAX_STEPS = 100000

    def __init__(self):
        self.config = None
        self.filename = None

    @staticmethod
    def get_default_config_file_name() -> list[str]:
        """
        Returns the default config file full paths where this software will look for the config file.
        """
        plat_dirs = PlatformDirs("operasim", "operasim")
        return [
            # site_config_dir on Unix is /etc/xdg/operasim; /etc/operasim is what people expect
            os.path.join(d, Config.CONFIG_FILE_NAME)
            for d in [
                plat_dirs.user_config_dir,
                plat_dirs.site_config_dir.replace("/etc/xdg/", "/etc/"),
            ]
        ]

    @staticmethod
    def get_schema_file_name() -> str:
        schema_install_dir = os.path.join(os.path.dirname(os.path.abspath(__file__)), "schema")
        schema_filename = os.path.join(schema_install_dir, Config.CONFIG_SCHEMA_FILE_NAME)
        if not os.path.exists(schema_filename):
            raise ConfigError(
                f"Failed to find the configuration file schema '{Config.CONFIG_SCHEMA_FILE_NAME}' in the directory '{schema_install_dir}'. Is the installation of operasim corrupted?"
            )
        return schema_filename

    def load(self, filename: str | None = None, schema_filename: str | None = None):
        """
        filename is a fully qualified path to the YAML config file; when None the default
        locations are searched and, if none exists, the built-in defaults are used.
        """
        if filename is None:
            for attempt in Config.get_default_config_file_name():
                if os.path.exists(attempt):
                    filename = attempt
                    break
        elif not os.path.exists(filename):
            raise ConfigError(f"Configuration file '{filename}' does not exist")

        if filename is None:
            logging.debug("No configuration file found, using built-in defaults")
            self.config = {}
            self._fill_defaults()
            return

        if schema_filename is None:
            schema_filename = Config.get_schema_file_name()

        logging.info("Loading app config '%s' and its schema '%s'", filename, schema_filename)

        try:
            tuple_list = yamale.make_data(filename)
        except yaml.YAMLError as e:
            raise ConfigError(f"Error parsing YAML file '{filename}': {e}")
        if len(tuple_list) != 1:
            raise ConfigError(f"Error parsing YAML file '{filename}': expected a single document, got {len(tuple_list)}")

        data = tuple_list[0][0]
        if data is None:
            # an empty file is a valid config selecting every default
            data = {}
        else:
            try:
                schema = yamale.make_schema(schema_filename)
                yamale.validate(schema, tuple_list)
            except YamaleError as e:
                raise ConfigError(f"Configuration file '{filename}' does not conform to schema: {e}")

        self.config = data
        self.filename = filename
        self._fill_defaults()

        if self.config["run"]["steps"] > self.config["limits"]["max_steps"]:
            raise ConfigError(
                f"Configuration file '{filename}' is invalid: run.steps={self.config['run']['steps']} exceeds limits.max_steps={self.config['limits']['max_steps']}"
            )
        logging.info("Configuration file '%s' successfully loaded and validated against schema", filename)

    def _fill_defaults(self):
        self._fill_defaults_logging()
        self._fill_defaults_run()
        self._fill_defaults_limits()

    def _fill_defaults_logging(self):
        if not self.config.get("logging"):
            self.config["logging"] = {}
        self.config["logging"].setdefault("level", Config.DEFAULT_LOG_LEVEL)

    def _fill_defaults_run(self):
        if not self.config.get("run"):
            self.config["run"] = {}
        for k, v in Config.DEFAULT_RUN.items():
            self.config["run"].setdefault(k, v)

    def _fill_defaults_limits(self):
        if not self.config.get("limits"):
            self.config["limits"] = {}
        self.config["limits"].setdefault("max_steps", Config.DEFAULT_MAX_STEPS)

    def apply_logging_config(self, verbose: bool = False):
        logl = "DEBUG" if verbose else self.config["logging"]["level"]
        if logl == "DEBUG":
            level = logging.DEBUG
        elif logl == "INFO":
            level = logging.INFO
        elif logl in ("WARN", "WARNING"):
            level = logging.WARNING
        elif logl in ("ERR", "ERROR"):
            level = logging.ERROR
        else:
            logging.error("Invalid logging level '%s' in config file. Defaulting to WARNING level.", logl)
            level = logging.WARNING
        logging.basicConfig(level=level, format="%(levelname)s: %(message)s", force=True)
        logging.debug("Log level set to %s", logging.getLevelName(level))
