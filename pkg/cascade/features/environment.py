import os

import django
from django.db import connection
from django.test.utils import setup_test_environment, teardown_test_environment


def before_all(context):
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'opo.settings')
    django.setup()
    setup_test_environment()
    # Run manifests land in a throwaway database
    context.database_name = connection.settings_dict['NAME']
    connection.creation.create_test_db(verbosity=0)


def after_all(context):
    connection.creation.destroy_test_db(context.database_name, verbosity=0)
    teardown_test_environment()
