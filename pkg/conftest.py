import os

import django
import pytest

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'opo.settings')
django.setup()


@pytest.fixture(scope='session', autouse=True)
def django_test_environment():
    from django.db import connection
    from django.test.utils import setup_test_environment, teardown_test_environment

    setup_test_environment()
    # Run manifests land in a throwaway database
    database_name = connection.settings_dict['NAME']
    connection.creation.create_test_db(verbosity=0)
    yield
    connection.creation.destroy_test_db(database_name, verbosity=0)
    teardown_test_environment()
